#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gapbridge/error.hpp"
#include "gapbridge/trajectory.hpp"

namespace gapbridge::solver {

enum class HeatScheme { explicit_euler, implicit_euler };

/// 1D diffusion u_t = D u_xx on a vertex-centred grid (lengths in mm, D in mm^2/s).
/// The two end points carry the Dirichlet values.
struct HeatConfig {
  double diffusivity = 15.0;  // mm^2/s
  std::size_t points = 50;
  double spacing_mm = 0.005;
  double dt = 1.2e-5;  // s
  std::size_t frame_count = 500;
  std::size_t steps_per_frame = 1;
  HeatScheme scheme = HeatScheme::implicit_euler;  // r = 7.2 at D = 15

  // Initial condition: Gaussian pulse unless `initial` is non-empty.
  double ic_amplitude = 1.0;
  double ic_center_fraction = 0.35;
  double ic_sigma_fraction = 0.1;
  std::vector<double> initial;

  double left = 0.0;
  double right = 0.0;

  double length_mm() const { return spacing_mm * static_cast<double>(points - 1); }
  double mesh_ratio() const { return diffusivity * dt / (spacing_mm * spacing_mm); }

  void validate() const {
    if (points < 3) throw ConfigError("heat: need at least 3 grid points");
    if (!(spacing_mm > 0.0)) throw ConfigError("heat: spacing must be positive");
    if (!(dt > 0.0)) throw ConfigError("heat: dt must be positive");
    if (diffusivity < 0.0) throw ConfigError("heat: diffusivity must be >= 0");
    if (frame_count < 1 || steps_per_frame < 1)
      throw ConfigError("heat: frame_count and steps_per_frame must be >= 1");
    if (!initial.empty() && initial.size() != points)
      throw ConfigError("heat: initial profile has " + std::to_string(initial.size()) +
                        " values, grid has " + std::to_string(points));
    if (scheme == HeatScheme::explicit_euler && mesh_ratio() > 0.5)
      throw NumericError("heat: explicit scheme unstable, D*dt/dx^2 = " +
                         std::to_string(mesh_ratio()) + " > 0.5");
  }
};

inline std::vector<double> heat_initial_condition(const HeatConfig& c) {
  std::vector<double> u = c.initial;
  if (u.empty()) {
    const double len = c.length_mm();
    const double x0 = c.ic_center_fraction * len;
    const double s = c.ic_sigma_fraction * len;
    u.resize(c.points);
    for (std::size_t i = 0; i < c.points; ++i) {
      const double x = c.spacing_mm * static_cast<double>(i) - x0;
      u[i] = c.ic_amplitude * std::exp(-0.5 * x * x / (s * s));
    }
  }
  u.front() = c.left;
  u.back() = c.right;
  return u;
}

namespace detail {

// Tridiagonal solve for (1+2r) u_i - r u_{i-1} - r u_{i+1} = rhs_i on the
// interior, end values fixed.
inline void implicit_step(std::vector<double>& u, double r) {
  const std::size_t n = u.size();
  const std::size_t m = n - 2;
  std::vector<double> c(m), d(m);
  for (std::size_t k = 0; k < m; ++k) {
    double rhs = u[k + 1];
    if (k == 0) rhs += r * u[0];
    if (k == m - 1) rhs += r * u[n - 1];
    const double a = (k == 0) ? 0.0 : -r;
    const double b = 1.0 + 2.0 * r;
    const double denom = b - a * (k == 0 ? 0.0 : c[k - 1]);
    c[k] = -r / denom;
    d[k] = (rhs - a * (k == 0 ? 0.0 : d[k - 1])) / denom;
  }
  for (std::size_t k = m; k-- > 0;) {
    u[k + 1] = d[k] - (k + 1 < m ? c[k] * u[k + 2] : 0.0);
  }
}

}  // namespace detail

/// Finite-volume solution; frame 0 is the initial condition.
inline Trajectory solve_heat_1d(const HeatConfig& c, const std::string& system = "heat1d") {
  c.validate();
  // Grid coordinates are stored in metres.
  Trajectory traj(Grid::line(c.points, c.spacing_mm * 1e-3), c.dt * c.steps_per_frame, 1,
                  {"u"}, system);
  auto u = heat_initial_condition(c);
  std::vector<double> next(u.size());
  const double r = c.mesh_ratio();
  traj.push_frame(u);
  for (std::size_t f = 1; f < c.frame_count; ++f) {
    for (std::size_t s = 0; s < c.steps_per_frame; ++s) {
      if (c.scheme == HeatScheme::explicit_euler) {
        next.front() = u.front();
        next.back() = u.back();
        for (std::size_t i = 1; i + 1 < u.size(); ++i)
          next[i] = u[i] + r * (u[i + 1] - 2.0 * u[i] + u[i - 1]);
        u.swap(next);
      } else {
        detail::implicit_step(u, r);
      }
    }
    traj.push_frame(u);
  }
  return traj;
}

}  // namespace gapbridge::solver
