#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gapbridge/error.hpp"
#include "gapbridge/trajectory.hpp"

namespace gapbridge::metrics {

/// Aligned point values, `components` numbers per point.
struct ValueSet {
  std::size_t components = 1;
  std::vector<double> values;

  std::size_t size() const { return components ? values.size() / components : 0; }
  std::span<const double> point(std::size_t i) const { return {values.data() + i * components, components}; }
};

namespace detail {

inline void check_aligned(const ValueSet& a, const ValueSet& b, const char* what) {
  if (a.components != b.components || a.values.size() != b.values.size())
    throw ShapeError(std::string(what) + ": sets are not aligned (" + std::to_string(a.size()) + "x" +
                     std::to_string(a.components) + " vs " + std::to_string(b.size()) + "x" +
                     std::to_string(b.components) + ")");
  if (a.size() == 0) throw ShapeError(std::string(what) + ": empty sets");
}

inline void check_2d(const ValueSet& a, const char* what) {
  if (a.components != 2) throw ShapeError(std::string(what) + ": needs 2-component values");
}

}  // namespace detail

/// Mean squared difference. Multi-component points are first reduced to
/// the average of their components.
inline double mse_sets(const ValueSet& a, const ValueSet& b) {
  detail::check_aligned(a, b, "mse");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t c = 0; c < a.components; ++c) {
      ma += a.values[i * a.components + c];
      mb += b.values[i * a.components + c];
    }
    const double d = (ma - mb) / double(a.components);
    sum += d * d;
  }
  return sum / double(a.size());
}

/// Mean magnitude square difference: mean of (|a_i| - |b_i|)^2.
inline double mmsd(const ValueSet& a, const ValueSet& b) {
  detail::check_aligned(a, b, "mmsd");
  detail::check_2d(a, "mmsd");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::hypot(a.values[2 * i], a.values[2 * i + 1]) - std::hypot(b.values[2 * i], b.values[2 * i + 1]);
    sum += d * d;
  }
  return sum / double(a.size());
}

/// Mean cosine similarity; points where either vector is shorter than 1e-12 are skipped.
inline double mcs(const ValueSet& a, const ValueSet& b) {
  detail::check_aligned(a, b, "mcs");
  detail::check_2d(a, "mcs");
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ax = a.values[2 * i], ay = a.values[2 * i + 1];
    const double bx = b.values[2 * i], by = b.values[2 * i + 1];
    const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
    if (na < 1e-12 || nb < 1e-12) continue;
    sum += (ax * bx + ay * by) / (na * nb);
    ++used;
  }
  if (used == 0) throw NumericError("mcs: every point has a degenerate (zero) vector");
  return sum / double(used);
}

/// Values of `t` at `points` for frames [first, last), frame-major.
inline ValueSet collect(const Trajectory& t, std::span<const std::size_t> points, std::size_t first,
                        std::size_t last) {
  if (last > t.frame_count() || first > last) throw ShapeError("collect: frame range out of bounds");
  ValueSet s{t.components(), {}};
  s.values.reserve((last - first) * points.size() * t.components());
  for (std::size_t f = first; f < last; ++f)
    for (auto p : points)
      for (std::size_t c = 0; c < t.components(); ++c) s.values.push_back(t.at(f, p, c));
  return s;
}

}  // namespace gapbridge::metrics
