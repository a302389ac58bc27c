#pragma once

#include <span>
#include <string>
#include <vector>

#include "gapbridge/error.hpp"
#include "gapbridge/metrics/pointwise.hpp"
#include "gapbridge/metrics/report.hpp"
#include "gapbridge/nn/trainer.hpp"
#include "gapbridge/trajectory.hpp"

namespace gapbridge::metrics {

/// Values of a predicted field at `points` for frames [first, last).
inline ValueSet collect(const nn::PredictedField& f, std::span<const std::size_t> points, std::size_t first,
                        std::size_t last) {
  if (first < f.first_frame || last > f.last_frame() || first > last)
    throw ShapeError("collect: frames [" + std::to_string(first) + ", " + std::to_string(last) +
                     ") not covered by the prediction");
  ValueSet s{f.components, {}};
  s.values.reserve((last - first) * points.size() * f.components);
  for (std::size_t t = first; t < last; ++t)
    for (auto p : points) {
      if (!f.present[p]) throw ShapeError("collect: point " + std::to_string(p) + " is absent from the prediction");
      for (std::size_t c = 0; c < f.components; ++c) s.values.push_back(f.at(t, p, c));
    }
  return s;
}

/// Splits [start, end) into consecutive intervals of `interval` frames (the
/// last one may be shorter) and compares U_curr and U_nn with U_act on each.
/// `points` defaults to every point present in the prediction.
inline std::vector<ComparisonRow> horizon_evaluation(const nn::PredictedField& nn, const Trajectory& curr,
                                                     const Trajectory& act, std::size_t start,
                                                     std::size_t interval = 250, std::size_t end = 0,
                                                     std::vector<std::size_t> points = {}) {
  if (end == 0) end = nn.last_frame();
  if (interval == 0) throw ConfigError("horizon: interval must be >= 1");
  if (start >= end) throw ShapeError("horizon: empty future range");
  if (points.empty()) points = nn.present_points();
  std::vector<ComparisonRow> rows;
  for (std::size_t a = start; a < end; a += interval) {
    const std::size_t b = std::min(end, a + interval);
    auto row = compare_sets("horizon", std::to_string(a) + "-" + std::to_string(b), collect(curr, points, a, b),
                            collect(nn, points, a, b), collect(act, points, a, b));
    row.first_frame = a;
    row.last_frame = b;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace gapbridge::metrics
