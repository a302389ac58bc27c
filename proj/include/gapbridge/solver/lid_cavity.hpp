#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "gapbridge/error.hpp"
#include "gapbridge/solver/forcing.hpp"
#include "gapbridge/trajectory.hpp"

namespace gapbridge::solver {

/// Incompressible flow in the unit square with tangentially moving top and
/// bottom walls and an optional body force.
struct CavityConfig {
  double reynolds = 100.0;
  std::size_t points = 30;  // output nodes per axis, walls included
  double dt = 1e-3;
  std::size_t frame_count = 2000;
  bool forcing_enabled = true;
  bool moving_lids_enabled = true;
  double pressure_tolerance = 1e-5;
  std::size_t pressure_max_iters = 20000;

  void validate() const {
    if (!(reynolds > 0.0)) throw ConfigError("cavity: Reynolds number must be positive");
    if (!(dt > 0.0)) throw ConfigError("cavity: dt must be positive");
    if (!(pressure_tolerance > 0.0)) throw ConfigError("cavity: pressure tolerance must be positive");
    if (points < 3) throw ConfigError("cavity: need at least 3 points per axis");
    if (frame_count < 1) throw ConfigError("cavity: frame_count must be >= 1");
    if (pressure_max_iters < 1) throw ConfigError("cavity: pressure_max_iters must be >= 1");
  }
};

/// Chorin projection on a staggered (MAC) mesh whose cell corners are the
/// output nodes. Advection is first-order upwind, diffusion central, and the
/// pressure Poisson equation is relaxed with SOR until the post-projection
/// cell divergence is below the tolerance.
class CavitySolver {
 public:
  explicit CavitySolver(const CavityConfig& c)
      : cfg_(c), nc_(c.points - 1), h_(1.0 / static_cast<double>(c.points - 1)) {
    cfg_.validate();
    // u: (nc+1) x (nc+2) with ghost rows; v: (nc+2) x (nc+1) with ghost columns.
    u_.assign((nc_ + 1) * (nc_ + 2), 0.0);
    v_.assign((nc_ + 2) * (nc_ + 1), 0.0);
    us_ = u_;
    vs_ = v_;
    p_.assign(nc_ * nc_, 0.0);
    rhs_.assign(nc_ * nc_, 0.0);
    apply_boundaries(0.0);
  }

  double time() const { return static_cast<double>(steps_) * cfg_.dt; }
  std::size_t steps() const { return steps_; }
  double last_divergence() const { return last_div_; }
  std::size_t last_pressure_iterations() const { return last_iters_; }
  double spacing() const { return h_; }
  std::size_t cells() const { return nc_; }

  // Face velocities; j (resp. i) is the cell row (column) index, may be -1 or nc for ghosts.
  double u(std::size_t i, long j) const { return u_[ui(i, j)]; }
  double v(long i, std::size_t j) const { return v_[vi(i, j)]; }
  // Intermediate (pre-projection) velocities of the last step.
  double u_predicted(std::size_t i, long j) const { return us_[ui(i, j)]; }
  double v_predicted(long i, std::size_t j) const { return vs_[vi(i, j)]; }

  /// Maximum absolute cell divergence of the current face velocities.
  double max_divergence() const {
    double m = 0.0;
    for (std::size_t j = 0; j < nc_; ++j)
      for (std::size_t i = 0; i < nc_; ++i)
        m = std::max(m, std::abs(divergence(u_, v_, i, j)));
    return m;
  }

  void step() {
    const double t = time();
    const double dt = cfg_.dt;
    const double inv_re = 1.0 / cfg_.reynolds;
    const double ih = 1.0 / h_, ih2 = ih * ih;
    us_ = u_;
    vs_ = v_;

    for (long j = 0; j < static_cast<long>(nc_); ++j) {
      for (std::size_t i = 1; i < nc_; ++i) {
        const double uc = u_[ui(i, j)];
        const double vbar = 0.25 * (v_[vi(long(i) - 1, j)] + v_[vi(long(i), j)] +
                                    v_[vi(long(i) - 1, j + 1)] + v_[vi(long(i), j + 1)]);
        const double dudx = uc > 0 ? (uc - u_[ui(i - 1, j)]) * ih : (u_[ui(i + 1, j)] - uc) * ih;
        const double dudy = vbar > 0 ? (uc - u_[ui(i, j - 1)]) * ih : (u_[ui(i, j + 1)] - uc) * ih;
        const double lap = (u_[ui(i + 1, j)] + u_[ui(i - 1, j)] + u_[ui(i, j + 1)] +
                            u_[ui(i, j - 1)] - 4.0 * uc) * ih2;
        double rhs = -(uc * dudx + vbar * dudy) + inv_re * lap;
        if (cfg_.forcing_enabled)
          rhs += eval_forcing(i * h_, (j + 0.5) * h_, t).fx;
        us_[ui(i, j)] = uc + dt * rhs;
      }
    }
    for (std::size_t j = 1; j < nc_; ++j) {
      for (long i = 0; i < static_cast<long>(nc_); ++i) {
        const double vc = v_[vi(i, j)];
        const double ubar = 0.25 * (u_[ui(i, long(j) - 1)] + u_[ui(i + 1, long(j) - 1)] +
                                    u_[ui(i, long(j))] + u_[ui(i + 1, long(j))]);
        const double dvdx = ubar > 0 ? (vc - v_[vi(i - 1, j)]) * ih : (v_[vi(i + 1, j)] - vc) * ih;
        const double dvdy = vc > 0 ? (vc - v_[vi(i, j - 1)]) * ih : (v_[vi(i, j + 1)] - vc) * ih;
        const double lap = (v_[vi(i + 1, j)] + v_[vi(i - 1, j)] + v_[vi(i, j + 1)] +
                            v_[vi(i, j - 1)] - 4.0 * vc) * ih2;
        double rhs = -(ubar * dvdx + vc * dvdy) + inv_re * lap;
        if (cfg_.forcing_enabled)
          rhs += eval_forcing((i + 0.5) * h_, j * h_, t).fy;
        vs_[vi(i, j)] = vc + dt * rhs;
      }
    }

    solve_pressure();

    u_ = us_;
    v_ = vs_;
    for (long j = 0; j < static_cast<long>(nc_); ++j)
      for (std::size_t i = 1; i < nc_; ++i)
        u_[ui(i, j)] -= dt * (p_[pi(i, j)] - p_[pi(i - 1, j)]) * ih;
    for (std::size_t j = 1; j < nc_; ++j)
      for (long i = 0; i < static_cast<long>(nc_); ++i)
        v_[vi(i, j)] -= dt * (p_[pi(i, j)] - p_[pi(i, j - 1)]) * ih;

    ++steps_;
    apply_boundaries(time());
    last_div_ = max_divergence();
    for (double x : u_)
      if (!std::isfinite(x))
        throw NumericError("cavity: non-finite velocity at step " + std::to_string(steps_));
    for (double x : v_)
      if (!std::isfinite(x))
        throw NumericError("cavity: non-finite velocity at step " + std::to_string(steps_));
  }

  /// Velocities interpolated to the (nc+1)^2 nodes, point-major, (u, v) per point.
  std::vector<double> node_frame() const {
    const std::size_t n = nc_ + 1;
    std::vector<double> out(n * n * 2);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t p = j * n + i;
        out[2 * p] = 0.5 * (u_[ui(i, long(j) - 1)] + u_[ui(i, long(j))]);
        out[2 * p + 1] = 0.5 * (v_[vi(long(i) - 1, j)] + v_[vi(long(i), j)]);
      }
    return out;
  }

  Grid node_grid() const { return Grid::plane(nc_ + 1, nc_ + 1, h_, h_); }

 private:
  std::size_t ui(std::size_t i, long j) const { return i * (nc_ + 2) + std::size_t(j + 1); }
  std::size_t vi(long i, std::size_t j) const { return std::size_t(i + 1) * (nc_ + 1) + j; }
  std::size_t pi(std::size_t i, std::size_t j) const { return j * nc_ + i; }
  std::size_t pi(std::size_t i, long j) const { return std::size_t(j) * nc_ + i; }
  std::size_t pi(long i, std::size_t j) const { return j * nc_ + std::size_t(i); }

  double divergence(const std::vector<double>& u, const std::vector<double>& v, std::size_t i,
                    std::size_t j) const {
    return (u[ui(i + 1, long(j))] - u[ui(i, long(j))] + v[vi(long(i), j + 1)] -
            v[vi(long(i), j)]) / h_;
  }

  void apply_boundaries(double t) {
    const double top = cfg_.moving_lids_enabled ? eval_lid_velocity(Lid::top, t) : 0.0;
    const double bottom = cfg_.moving_lids_enabled ? eval_lid_velocity(Lid::bottom, t) : 0.0;
    const long nc = static_cast<long>(nc_);
    for (long j = -1; j <= nc; ++j) {
      u_[ui(0, j)] = 0.0;
      u_[ui(nc_, j)] = 0.0;
    }
    for (std::size_t i = 1; i < nc_; ++i) {
      u_[ui(i, -1)] = 2.0 * bottom - u_[ui(i, 0)];
      u_[ui(i, nc)] = 2.0 * top - u_[ui(i, nc - 1)];
    }
    // Wall ghosts of the corner faces, so node interpolation yields the lid speed.
    u_[ui(0, -1)] = u_[ui(nc_, -1)] = 2.0 * bottom;
    u_[ui(0, nc)] = u_[ui(nc_, nc)] = 2.0 * top;
    for (long i = -1; i <= nc; ++i) {
      v_[vi(i, 0)] = 0.0;
      v_[vi(i, nc_)] = 0.0;
    }
    for (std::size_t j = 1; j < nc_; ++j) {
      v_[vi(-1, j)] = -v_[vi(0, j)];
      v_[vi(nc, j)] = -v_[vi(nc - 1, j)];
    }
  }

  // Solves L p = div(u*) / dt with homogeneous Neumann conditions; the
  // residual times dt is exactly the divergence left after projection.
  void solve_pressure() {
    const double dt = cfg_.dt;
    const double ih2 = 1.0 / (h_ * h_);
    for (std::size_t j = 0; j < nc_; ++j)
      for (std::size_t i = 0; i < nc_; ++i) rhs_[pi(i, j)] = divergence(us_, vs_, i, j) / dt;
    const double omega = 2.0 / (1.0 + std::sin(std::numbers::pi / static_cast<double>(nc_)));
    double resid = 0.0;
    for (std::size_t it = 1; it <= cfg_.pressure_max_iters; ++it) {
      for (std::size_t j = 0; j < nc_; ++j)
        for (std::size_t i = 0; i < nc_; ++i) {
          double sum = 0.0;
          int cnt = 0;
          if (i > 0) { sum += p_[pi(i - 1, j)]; ++cnt; }
          if (i + 1 < nc_) { sum += p_[pi(i + 1, j)]; ++cnt; }
          if (j > 0) { sum += p_[pi(i, j - 1)]; ++cnt; }
          if (j + 1 < nc_) { sum += p_[pi(i, j + 1)]; ++cnt; }
          const double gs = (sum - rhs_[pi(i, j)] / ih2) / cnt;
          p_[pi(i, j)] += omega * (gs - p_[pi(i, j)]);
        }
      resid = 0.0;
      for (std::size_t j = 0; j < nc_; ++j)
        for (std::size_t i = 0; i < nc_; ++i) {
          double lap = 0.0;
          const double pc = p_[pi(i, j)];
          if (i > 0) lap += p_[pi(i - 1, j)] - pc;
          if (i + 1 < nc_) lap += p_[pi(i + 1, j)] - pc;
          if (j > 0) lap += p_[pi(i, j - 1)] - pc;
          if (j + 1 < nc_) lap += p_[pi(i, j + 1)] - pc;
          resid = std::max(resid, std::abs(rhs_[pi(i, j)] - lap * ih2) * dt);
        }
      if (!std::isfinite(resid))
        throw NumericError("cavity: pressure solve diverged at step " + std::to_string(steps_ + 1));
      if (resid <= 0.5 * cfg_.pressure_tolerance) {
        last_iters_ = it;
        return;
      }
    }
    throw NumericError("cavity: pressure solve did not converge in " +
                       std::to_string(cfg_.pressure_max_iters) + " iterations at step " +
                       std::to_string(steps_ + 1) + ", divergence residual " +
                       std::to_string(resid));
  }

  CavityConfig cfg_;
  std::size_t nc_;
  double h_;
  std::vector<double> u_, v_, us_, vs_, p_, rhs_;
  std::size_t steps_ = 0;
  std::size_t last_iters_ = 0;
  double last_div_ = 0.0;
};

struct CavityRun {
  Trajectory velocity;
  double max_divergence = 0.0;  // over all steps
};

/// One frame per time step; frame 0 is the rest state.
inline CavityRun solve_lid_cavity_2d(const CavityConfig& c,
                                     const std::string& system = "lidcavity2d") {
  CavitySolver s(c);
  CavityRun run{Trajectory(s.node_grid(), c.dt, 2, {"u", "v"}, system), 0.0};
  run.velocity.push_frame(s.node_frame());
  for (std::size_t f = 1; f < c.frame_count; ++f) {
    s.step();
    if (s.last_divergence() > c.pressure_tolerance)
      throw NumericError("cavity: divergence " + std::to_string(s.last_divergence()) +
                         " above tolerance at step " + std::to_string(f));
    run.max_divergence = std::max(run.max_divergence, s.last_divergence());
    run.velocity.push_frame(s.node_frame());
  }
  return run;
}

/// Body force sampled at the output nodes for every frame time (components F_x, F_y).
inline Trajectory forcing_trajectory(const Grid& g, double dt, std::size_t frames,
                                     const std::string& system = "lidcavity2d") {
  Trajectory out(g, dt, 2, {"F_x", "F_y"}, system);
  std::vector<double> frame(g.point_count() * 2);
  for (std::size_t f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) * dt;
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t i = 0; i < g.nx(); ++i) {
        const auto s = eval_forcing(g.coord(0, i), g.coord(1, j), t);
        const auto p = g.index(i, j);
        frame[2 * p] = s.fx;
        frame[2 * p + 1] = s.fy;
      }
    out.push_frame(frame);
  }
  return out;
}

}  // namespace gapbridge::solver
