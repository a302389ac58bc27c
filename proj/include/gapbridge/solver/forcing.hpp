#pragma once

#include <cmath>

namespace gapbridge::solver {

/// Body force of the forced lid cavity (whirlpool polynomial plus a
/// periodic term with an exponentially chirped phase).
struct ForcingSample {
  double fx = 0.0;
  double fy = 0.0;
};

enum class Lid { top, bottom };

inline double forcing_phase(double t) { return std::exp(1.3 * t) + 80.0 * t; }

inline ForcingSample eval_forcing(double x, double y, double t) {
  const double y2 = y * y, y3 = y2 * y, y4 = y3 * y;
  const double x2 = x * x, x3 = x2 * x, x4 = x3 * x;
  const double phase = forcing_phase(t);
  ForcingSample f;
  f.fx = (12.0 - 24.0 * y) * x4 + (-24.0 + 48.0 * y) * x3 +
         (-48.0 * y + 72.0 * y2 - 48.0 * y3 + 12.0) * x2 +
         (-2.0 + 24.0 * y - 72.0 * y2 + 48.0 * y3) * x +
         (1.0 - 4.0 * y + 12.0 * y2 - 8.0 * y3) * 120.0 * std::sin(phase);
  f.fy = (8.0 - 48.0 * y + 48.0 * y2) * x3 + (-12.0 + 72.0 * y - 72.0 * y2) * x2 +
         (4.0 - 24.0 * y + 48.0 * y2 - 48.0 * y3 + 24.0 * y4) * x +
         (-12.0 * y2 + 24.0 * y3 - 12.0 * y4) * 120.0 * std::cos(phase);
  return f;
}

/// Tangential speed of the moving top/bottom walls.
inline double eval_lid_velocity(Lid lid, double t) {
  const double offset = lid == Lid::top ? 60.0 : 50.0;
  return 2.0 * std::sin((std::exp(1.2 * t) + offset) * t);
}

}  // namespace gapbridge::solver
