#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gapbridge/error.hpp"

namespace gapbridge::nn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update.
inline void adam_step(std::span<double> params, std::span<const double> grad, AdamState& s,
                      const AdamConfig& cfg = {}) {
  if (s.m.empty() && s.step == 0) s = AdamState(params.size());
  if (grad.size() != params.size() || s.m.size() != params.size() || s.v.size() != params.size())
    throw ShapeError("adam: parameter/gradient/moment sizes differ");
  ++s.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(s.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * grad[i];
    s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mhat = s.m[i] / c1;
    const double vhat = s.v[i] / c2;
    params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

}  // namespace gapbridge::nn
