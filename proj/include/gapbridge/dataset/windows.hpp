#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gapbridge/error.hpp"
#include "gapbridge/trajectory.hpp"

namespace gapbridge::dataset {

struct WindowCenter {
  std::size_t point = 0;  // grid point index
  std::size_t frame = 0;  // target frame
  bool operator==(const WindowCenter&) const = default;
};

/// One causal space-time window: k slices (frames t-k+1..t) of stencil
/// features, and the U_act value at the centre point at frame t.
struct WindowSample {
  WindowCenter center;
  std::vector<std::vector<double>> slices;
  std::vector<double> target;
};

struct WindowOptions {
  std::size_t k = 3;
  // Optional per-point eligibility (external grids with holes). Points near
  // the boundary are ineligible regardless.
  std::vector<bool> mask;
  // Time span mapped to [0, 1] for the time coordinate; <= 0 means the whole trajectory.
  double time_extent = 0.0;
};

/// Lazy view of every window over a trajectory triple. Samples are
/// enumerated frame-major: id = (frame - (k-1)) * P + slot, where slot
/// indexes the eligible points in ascending order.
class WindowSet {
 public:
  WindowSet(Trajectory curr, std::optional<Trajectory> aux, Trajectory act,
            WindowOptions opt = {})
      : curr_(std::move(curr)), aux_(std::move(aux)), act_(std::move(act)), opt_(std::move(opt)) {
    check();
    const auto& g = curr_.grid();
    const std::size_t r = (opt_.k - 1) / 2;
    slot_of_.assign(g.point_count(), npos);
    for (std::size_t iy = 0; iy < g.ny(); ++iy)
      for (std::size_t ix = 0; ix < g.nx(); ++ix) {
        const bool inside_x = ix >= r && ix + r < g.nx();
        const bool inside_y = g.dims == 1 || (iy >= r && iy + r < g.ny());
        const auto p = g.index(ix, iy);
        if (inside_x && inside_y && (opt_.mask.empty() || opt_.mask[p])) {
          slot_of_[p] = eligible_.size();
          eligible_.push_back(p);
        }
      }
    for (std::size_t d = 0; d < g.dims; ++d) {
      lo_.push_back(g.origin[d]);
      span_.push_back(g.spacing[d] * static_cast<double>(g.shape[d] - 1));
    }
    time_extent_ = opt_.time_extent > 0.0
                       ? opt_.time_extent
                       : curr_.dt() * static_cast<double>(std::max<std::size_t>(curr_.frame_count(), 2) - 1);
    // Stencil offsets, y outer and x inner.
    const long rr = static_cast<long>(r);
    for (long dy = (g.dims == 2 ? -rr : 0); dy <= (g.dims == 2 ? rr : 0); ++dy)
      for (long dx = -rr; dx <= rr; ++dx)
        offsets_.push_back(dy * static_cast<long>(g.nx()) + dx);
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t k() const { return opt_.k; }
  std::size_t stencil_size() const { return offsets_.size(); }
  std::size_t aux_components() const { return aux_ ? aux_->components() : 0; }
  /// Features per time slice: (m_curr + m_aux) * k^n + n + 1.
  std::size_t feature_count() const {
    return (curr_.components() + aux_components()) * stencil_size() + curr_.grid().dims + 1;
  }
  std::size_t target_components() const { return act_.components(); }
  std::size_t first_frame() const { return opt_.k - 1; }
  std::size_t frame_count() const { return curr_.frame_count(); }
  std::size_t eligible_frame_count() const { return frame_count() - first_frame(); }
  const std::vector<std::size_t>& eligible_points() const { return eligible_; }
  std::size_t points_per_frame() const { return eligible_.size(); }
  std::size_t size() const { return points_per_frame() * eligible_frame_count(); }
  /// Slot of a grid point in eligible_points(), or npos.
  std::size_t slot(std::size_t point) const { return slot_of_[point]; }
  double time_extent() const { return time_extent_; }

  const Trajectory& curr() const { return curr_; }
  const Trajectory& act() const { return act_; }
  const std::optional<Trajectory>& aux() const { return aux_; }

  WindowCenter center(std::size_t id) const {
    return {eligible_[id % points_per_frame()], first_frame() + id / points_per_frame()};
  }
  std::size_t id(std::size_t slot, std::size_t frame) const {
    return (frame - first_frame()) * points_per_frame() + slot;
  }

  /// Writes k slices of feature_count() values, oldest slice first.
  void features(std::size_t id, std::span<double> out) const {
    features_at(center(id), out);
  }

  void features_at(WindowCenter c, std::span<double> out) const {
    const std::size_t F = feature_count();
    const auto& g = curr_.grid();
    const std::size_t mc = curr_.components(), ma = aux_components();
    const std::size_t ix = c.point % g.nx(), iy = c.point / g.nx();
    for (std::size_t s = 0; s < opt_.k; ++s) {
      const std::size_t f = c.frame + 1 - opt_.k + s;
      double* o = out.data() + s * F;
      for (long off : offsets_) {
        const auto p = static_cast<std::size_t>(static_cast<long>(c.point) + off);
        for (std::size_t comp = 0; comp < mc; ++comp) *o++ = curr_.at(f, p, comp);
      }
      for (long off : offsets_) {
        const auto p = static_cast<std::size_t>(static_cast<long>(c.point) + off);
        for (std::size_t comp = 0; comp < ma; ++comp) *o++ = aux_->at(f, p, comp);
      }
      *o++ = (g.coord(0, ix) - lo_[0]) / span_[0];
      if (g.dims == 2) *o++ = (g.coord(1, iy) - lo_[1]) / span_[1];
      *o++ = curr_.time(f) / time_extent_;
    }
  }

  void target(std::size_t id, std::span<double> out) const {
    const auto c = center(id);
    for (std::size_t comp = 0; comp < act_.components(); ++comp) out[comp] = act_.at(c.frame, c.point, comp);
  }

  WindowSample sample(std::size_t id) const {
    WindowSample w;
    w.center = center(id);
    std::vector<double> flat(opt_.k * feature_count());
    features(id, flat);
    for (std::size_t s = 0; s < opt_.k; ++s)
      w.slices.emplace_back(flat.begin() + s * feature_count(), flat.begin() + (s + 1) * feature_count());
    w.target.resize(target_components());
    target(id, w.target);
    return w;
  }

  std::vector<WindowSample> materialize() const {
    std::vector<WindowSample> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(sample(i));
    return out;
  }

 private:
  void check() const {
    curr_.validate();
    act_.validate();
    if (opt_.k < 1 || opt_.k % 2 == 0) throw ConfigError("windows: k must be odd and >= 1");
    auto same = [](const Trajectory& a, const Trajectory& b, const char* what) {
      if (!(a.grid() == b.grid())) throw ShapeError(std::string("windows: ") + what + " grid differs from U_curr");
      if (a.dt() != b.dt()) throw ShapeError(std::string("windows: ") + what + " dt differs from U_curr");
      if (a.frame_count() != b.frame_count())
        throw ShapeError(std::string("windows: ") + what + " frame count differs from U_curr");
    };
    same(act_, curr_, "U_act");
    if (aux_) {
      aux_->validate();
      same(*aux_, curr_, "auxiliary");
    }
    for (auto n : curr_.grid().shape)
      if (opt_.k > n) throw ShapeError("windows: k=" + std::to_string(opt_.k) + " exceeds axis size " + std::to_string(n));
    if (curr_.frame_count() < opt_.k) throw ShapeError("windows: fewer frames than k");
    if (!opt_.mask.empty() && opt_.mask.size() != curr_.grid().point_count())
      throw ShapeError("windows: eligibility mask size differs from grid point count");
  }

  Trajectory curr_;
  std::optional<Trajectory> aux_;
  Trajectory act_;
  WindowOptions opt_;
  std::vector<std::size_t> eligible_;
  std::vector<std::size_t> slot_of_;
  std::vector<long> offsets_;
  std::vector<double> lo_, span_;
  double time_extent_ = 1.0;
};

inline WindowSet build_windows(const Trajectory& curr, const std::optional<Trajectory>& aux,
                               const Trajectory& act, WindowOptions opt = {}) {
  return WindowSet(curr, aux, act, std::move(opt));
}

/// Broadcasts a spatially uniform series (e.g. a body position) to every grid point.
inline Trajectory uniform_channel(const Grid& g, double dt, std::span<const std::vector<double>> series,
                                  std::vector<std::string> names, std::string system = "") {
  const std::size_t m = names.size();
  Trajectory t(g, dt, m, std::move(names), std::move(system));
  std::vector<double> frame(g.point_count() * m);
  for (const auto& s : series) {
    if (s.size() != m) throw ShapeError("uniform_channel: sample width differs from name count");
    for (std::size_t p = 0; p < g.point_count(); ++p)
      for (std::size_t c = 0; c < m; ++c) frame[p * m + c] = s[c];
    t.push_frame(frame);
  }
  return t;
}

}  // namespace gapbridge::dataset
