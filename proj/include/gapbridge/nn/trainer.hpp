#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "gapbridge/dataset/normalize.hpp"
#include "gapbridge/dataset/windows.hpp"
#include "gapbridge/error.hpp"
#include "gapbridge/nn/adam.hpp"
#include "gapbridge/nn/network.hpp"
#include "gapbridge/rng.hpp"

namespace gapbridge::nn {

/// Assembles normalized slice matrices and targets for a list of window ids.
class BatchBuilder {
 public:
  BatchBuilder(const dataset::WindowSet& w, const dataset::NormStats& s) : w_(w), s_(s) {
    if (s.size() != w.feature_count())
      throw ShapeError("batch: norm stats cover " + std::to_string(s.size()) + " features, windows have " +
                       std::to_string(w.feature_count()));
    buf_.resize(w.k() * w.feature_count());
  }

  void fill(std::span<const std::size_t> ids, std::vector<Matrix>& x, Matrix* y = nullptr) {
    const auto F = Eigen::Index(w_.feature_count());
    const auto B = Eigen::Index(ids.size());
    x.resize(w_.k());
    for (auto& m : x) m.resize(F, B);
    if (y) y->resize(Eigen::Index(w_.target_components()), B);
    std::vector<double> tgt(w_.target_components());
    for (Eigen::Index b = 0; b < B; ++b) {
      w_.features(ids[b], buf_);
      s_.apply(buf_);
      for (std::size_t t = 0; t < w_.k(); ++t)
        x[t].col(b) = Eigen::Map<const Vector>(buf_.data() + t * F, F);
      if (y) {
        w_.target(ids[b], tgt);
        y->col(b) = Eigen::Map<const Vector>(tgt.data(), Eigen::Index(tgt.size()));
      }
    }
  }

 private:
  const dataset::WindowSet& w_;
  const dataset::NormStats& s_;
  std::vector<double> buf_;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  AdamConfig adam;
  std::uint64_t shuffle_seed = 0;
  std::function<void(std::size_t epoch, double train_loss, double val_loss, double seconds)> on_epoch;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

/// Mean loss over `ids`, evaluated in fixed-size chunks.
inline double evaluate_loss(const Network& net, const dataset::WindowSet& w, const dataset::NormStats& s,
                            std::span<const std::size_t> ids, std::size_t chunk = 256) {
  if (ids.empty()) return std::numeric_limits<double>::quiet_NaN();
  BatchBuilder bb(w, s);
  std::vector<Matrix> x;
  Matrix y;
  ForwardCache cache;
  double total = 0.0;
  for (std::size_t i = 0; i < ids.size(); i += chunk) {
    const auto part = ids.subspan(i, std::min(chunk, ids.size() - i));
    bb.fill(part, x, &y);
    const Matrix pred = net.forward(x, cache);
    total += (pred - y).squaredNorm() / double(y.rows());
  }
  return total / double(ids.size());
}

/// Mini-batch Adam over the training split with a seeded shuffle per epoch.
/// The last partial batch is kept. Losses are recomputed on the full
/// training and validation splits after every epoch.
inline TrainHistory train(Network& net, const dataset::WindowSet& w, const dataset::NormalizedBundle& data,
                          AdamState& state, const TrainConfig& cfg) {
  net.spec().validate_for(w.feature_count(), w.k(), w.target_components());
  if (cfg.batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (data.split.train.empty() && cfg.epochs > 0) throw ConfigError("train: training split is empty");
  if (state.m.size() != net.parameter_count()) state = AdamState(net.parameter_count());

  TrainHistory hist;
  std::vector<std::size_t> order(data.split.train.begin(), data.split.train.end());
  Rng rng(cfg.shuffle_seed);
  BatchBuilder bb(w, data.stats);
  std::vector<Matrix> x;
  Matrix y;
  ForwardCache cache;
  std::vector<double> grad(net.parameter_count());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(std::span(order));
    std::size_t batch_index = 0;
    for (std::size_t i = 0; i < order.size(); i += cfg.batch_size, ++batch_index) {
      const auto ids = std::span(order).subspan(i, std::min(cfg.batch_size, order.size() - i));
      bb.fill(ids, x, &y);
      const Matrix pred = net.forward(x, cache);
      const double loss = mse_loss(pred, y);
      if (!std::isfinite(loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(batch_index));
      std::fill(grad.begin(), grad.end(), 0.0);
      net.backward(cache, mse_loss_gradient(pred, y), grad);
      adam_step(net.parameters(), grad, state, cfg.adam);
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = evaluate_loss(net, w, data.stats, data.split.train);
    rec.val_loss = evaluate_loss(net, w, data.stats, data.split.validation);
    if (!std::isfinite(rec.train_loss))
      throw NumericError("train: non-finite training loss after epoch " + std::to_string(epoch + 1));
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    hist.epochs.push_back(rec);
    if (cfg.on_epoch) cfg.on_epoch(rec.epoch, rec.train_loss, rec.val_loss, rec.seconds);
  }
  return hist;
}

/// Network output on the eligible points of frames [first, last). Points
/// outside the window set are absent (NaN, present = false).
struct PredictedField {
  Grid grid;
  std::size_t components = 1;
  std::size_t first_frame = 0;
  std::size_t frames = 0;
  std::vector<bool> present;  // per grid point
  std::vector<double> values;

  double at(std::size_t frame, std::size_t point, std::size_t c = 0) const {
    return values[((frame - first_frame) * grid.point_count() + point) * components + c];
  }
  std::size_t last_frame() const { return first_frame + frames; }
  std::vector<std::size_t> present_points() const {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < present.size(); ++p)
      if (present[p]) out.push_back(p);
    return out;
  }
};

inline PredictedField predict_field(const Network& net, const dataset::WindowSet& w, const dataset::NormStats& s,
                                    std::size_t first, std::size_t last, std::size_t chunk = 512) {
  if (first < w.first_frame() || last > w.frame_count() || first > last)
    throw ShapeError("predict: frames [" + std::to_string(first) + ", " + std::to_string(last) +
                     ") outside the window range [" + std::to_string(w.first_frame()) + ", " +
                     std::to_string(w.frame_count()) + ")");
  net.spec().validate_for(w.feature_count(), w.k(), w.target_components());
  PredictedField out;
  out.grid = w.curr().grid();
  out.components = w.target_components();
  out.first_frame = first;
  out.frames = last - first;
  out.present.assign(out.grid.point_count(), false);
  for (auto p : w.eligible_points()) out.present[p] = true;
  out.values.assign(out.frames * out.grid.point_count() * out.components, std::numeric_limits<double>::quiet_NaN());

  std::vector<std::size_t> ids;
  for (std::size_t f = first; f < last; ++f)
    for (std::size_t slot = 0; slot < w.points_per_frame(); ++slot) ids.push_back(w.id(slot, f));
  BatchBuilder bb(w, s);
  std::vector<Matrix> x;
  ForwardCache cache;
  for (std::size_t i = 0; i < ids.size(); i += chunk) {
    const auto part = std::span<const std::size_t>(ids).subspan(i, std::min(chunk, ids.size() - i));
    bb.fill(part, x);
    const Matrix pred = net.forward(x, cache);
    for (std::size_t b = 0; b < part.size(); ++b) {
      const auto c = w.center(part[b]);
      for (std::size_t comp = 0; comp < out.components; ++comp)
        out.values[((c.frame - first) * out.grid.point_count() + c.point) * out.components + comp] =
            pred(Eigen::Index(comp), Eigen::Index(b));
    }
  }
  return out;
}

}  // namespace gapbridge::nn
