#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gapbridge/error.hpp"
#include "gapbridge/rng.hpp"

namespace gapbridge::nn {

using Matrix = Eigen::MatrixXd;  // features x batch
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WeightMap = Eigen::Map<RowMatrix>;
using ConstWeightMap = Eigen::Map<const RowMatrix>;
using BiasMap = Eigen::Map<Vector>;
using ConstBiasMap = Eigen::Map<const Vector>;

enum class Activation { relu, linear, tanh };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "linear") return Activation::linear;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

struct DenseSpec {
  std::size_t width = 1;
  Activation activation = Activation::relu;
  bool operator==(const DenseSpec&) const = default;
};

/// Time-distributed dense stack -> stacked LSTM -> dense head.
struct NetworkSpec {
  std::size_t input_features = 1;
  std::size_t sequence_length = 3;
  std::vector<DenseSpec> stage1;
  std::vector<std::size_t> stage2;
  std::vector<DenseSpec> stage3;

  std::size_t output_width() const { return stage3.empty() ? 0 : stage3.back().width; }

  void validate() const {
    if (input_features < 1 || sequence_length < 1)
      throw ConfigError("network: input width and sequence length must be >= 1");
    if (stage2.empty()) throw ConfigError("network: at least one LSTM layer is required");
    if (stage3.empty()) throw ConfigError("network: at least one output layer is required");
    for (auto& d : stage1)
      if (d.width < 1) throw ConfigError("network: stage-1 widths must be >= 1");
    for (auto w : stage2)
      if (w < 1) throw ConfigError("network: LSTM widths must be >= 1");
    for (auto& d : stage3)
      if (d.width < 1) throw ConfigError("network: stage-3 widths must be >= 1");
  }

  void validate_for(std::size_t features, std::size_t k, std::size_t m) const {
    validate();
    if (features != input_features)
      throw ShapeError("network: expects " + std::to_string(input_features) +
                       " input features, windows provide " + std::to_string(features));
    if (k != sequence_length)
      throw ShapeError("network: sequence length " + std::to_string(sequence_length) +
                       " differs from window k=" + std::to_string(k));
    if (m != output_width())
      throw ShapeError("network: output width " + std::to_string(output_width()) +
                       " differs from target components " + std::to_string(m));
  }

  /// TDDL 32 -> LSTM 64/32/32 -> dense 10 -> linear m.
  static NetworkSpec one_tddl(std::size_t features, std::size_t k, std::size_t m) {
    return {features, k, {{32, Activation::relu}}, {64, 32, 32},
            {{10, Activation::relu}, {m, Activation::linear}}};
  }
  /// TDDL 32/64 -> LSTM 64/32/32 -> dense 10 -> linear m.
  static NetworkSpec two_tddl(std::size_t features, std::size_t k, std::size_t m) {
    return {features, k, {{32, Activation::relu}, {64, Activation::relu}}, {64, 32, 32},
            {{10, Activation::relu}, {m, Activation::linear}}};
  }

  bool operator==(const NetworkSpec&) const = default;
};

struct DenseLayout {
  std::size_t weights = 0, bias = 0, out = 0, in = 0;
  Activation activation = Activation::relu;
};

// Gate blocks are stacked F, I, C, O along the rows; each row is [h_{t-1}, s_t].
struct LstmLayout {
  std::size_t weights = 0, bias = 0, hidden = 0, in = 0;
  std::size_t cols() const { return hidden + in; }
};

/// Forward intermediates for one batch, kept for backpropagation.
struct ForwardCache {
  std::size_t batch = 0;
  std::vector<Matrix> input;                    // [t]
  std::vector<std::vector<Matrix>> s1_out;      // [layer][t] post-activation
  std::vector<std::vector<Matrix>> h, c;        // [layer][t], t = 0 is the zero state
  std::vector<std::vector<Matrix>> gates;       // [layer][t-1], 4H x B post-activation
  std::vector<Matrix> s3_out;                   // [layer]
};

namespace detail {

inline void activate(Matrix& z, Activation a) {
  switch (a) {
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::linear: break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
  }
}

// Multiplies the upstream gradient by the activation derivative, expressed via the output.
inline void activate_backward(Matrix& grad, const Matrix& out, Activation a) {
  switch (a) {
    case Activation::relu: grad = (out.array() > 0.0).select(grad, 0.0); break;
    case Activation::linear: break;
    case Activation::tanh: grad.array() *= 1.0 - out.array().square(); break;
  }
}

inline Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

}  // namespace detail

/// All parameters live in one flat buffer in canonical order: stage 1
/// layers, LSTM layers, stage 3 layers; each layer stores its weights
/// row-major followed by its bias. LSTM weights and biases are ordered by
/// gate block F, I, C, O.
class Network {
 public:
  Network() = default;
  explicit Network(NetworkSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    std::size_t off = 0;
    std::size_t in = spec_.input_features;
    auto dense = [&](const DenseSpec& d) {
      DenseLayout l{off, off + d.width * in, d.width, in, d.activation};
      off = l.bias + d.width;
      in = d.width;
      return l;
    };
    for (auto& d : spec_.stage1) stage1_.push_back(dense(d));
    for (auto H : spec_.stage2) {
      LstmLayout l{off, off + 4 * H * (H + in), H, in};
      off = l.bias + 4 * H;
      in = H;
      stage2_.push_back(l);
    }
    for (auto& d : spec_.stage3) stage3_.push_back(dense(d));
    params_.assign(off, 0.0);
  }

  const NetworkSpec& spec() const { return spec_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  const std::vector<DenseLayout>& stage1() const { return stage1_; }
  const std::vector<LstmLayout>& stage2() const { return stage2_; }
  const std::vector<DenseLayout>& stage3() const { return stage3_; }

  ConstWeightMap weights(const DenseLayout& l) const { return {params_.data() + l.weights, Eigen::Index(l.out), Eigen::Index(l.in)}; }
  WeightMap weights(const DenseLayout& l) { return {params_.data() + l.weights, Eigen::Index(l.out), Eigen::Index(l.in)}; }
  ConstBiasMap bias(const DenseLayout& l) const { return {params_.data() + l.bias, Eigen::Index(l.out)}; }
  BiasMap bias(const DenseLayout& l) { return {params_.data() + l.bias, Eigen::Index(l.out)}; }
  ConstWeightMap weights(const LstmLayout& l) const { return {params_.data() + l.weights, Eigen::Index(4 * l.hidden), Eigen::Index(l.cols())}; }
  WeightMap weights(const LstmLayout& l) { return {params_.data() + l.weights, Eigen::Index(4 * l.hidden), Eigen::Index(l.cols())}; }
  ConstBiasMap bias(const LstmLayout& l) const { return {params_.data() + l.bias, Eigen::Index(4 * l.hidden)}; }
  BiasMap bias(const LstmLayout& l) { return {params_.data() + l.bias, Eigen::Index(4 * l.hidden)}; }

  bool all_finite() const {
    for (double p : params_)
      if (!std::isfinite(p)) return false;
    return true;
  }

  /// Batched forward pass; `input[t]` is features x batch. Returns m x batch.
  Matrix forward(std::span<const Matrix> input, ForwardCache& cache) const {
    const std::size_t k = spec_.sequence_length;
    if (input.size() != k)
      throw ShapeError("network: got " + std::to_string(input.size()) + " slices, expected " + std::to_string(k));
    const auto B = input[0].cols();
    for (auto& x : input)
      if (x.rows() != Eigen::Index(spec_.input_features) || x.cols() != B)
        throw ShapeError("network: slice shape mismatch");
    cache.batch = std::size_t(B);
    cache.input.assign(input.begin(), input.end());

    // Stage 1: shared dense stack applied to each slice.
    cache.s1_out.assign(stage1_.size(), std::vector<Matrix>(k));
    for (std::size_t l = 0; l < stage1_.size(); ++l)
      for (std::size_t t = 0; t < k; ++t) {
        const Matrix& a = l == 0 ? input[t] : cache.s1_out[l - 1][t];
        Matrix& z = cache.s1_out[l][t];
        z.noalias() = weights(stage1_[l]) * a;
        z.colwise() += bias(stage1_[l]);
        detail::activate(z, stage1_[l].activation);
      }

    // Stage 2: stacked LSTM; every layer returns its full hidden sequence.
    const std::size_t L2 = stage2_.size();
    cache.h.assign(L2, {});
    cache.c.assign(L2, {});
    cache.gates.assign(L2, {});
    for (std::size_t l = 0; l < L2; ++l) {
      const auto& lay = stage2_[l];
      const auto H = Eigen::Index(lay.hidden);
      const auto W = weights(lay);
      const auto b = bias(lay);
      auto& hs = cache.h[l];
      auto& cs = cache.c[l];
      auto& gs = cache.gates[l];
      hs.assign(k + 1, Matrix::Zero(H, B));
      cs.assign(k + 1, Matrix::Zero(H, B));
      gs.assign(k, Matrix());
      for (std::size_t t = 1; t <= k; ++t) {
        const Matrix& s = l == 0 ? stage1_input(cache, input, t - 1) : cache.h[l - 1][t];
        Matrix z(4 * H, B);
        z.noalias() = W.leftCols(H) * hs[t - 1];
        z.noalias() += W.rightCols(Eigen::Index(lay.in)) * s;
        z.colwise() += b;
        Matrix& g = gs[t - 1];
        g.resize(4 * H, B);
        g.topRows(2 * H) = detail::sigmoid(z.topRows(2 * H).array()).matrix();
        g.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh().matrix();
        g.bottomRows(H) = detail::sigmoid(z.bottomRows(H).array()).matrix();
        cs[t] = (g.topRows(H).array() * cs[t - 1].array() +
                 g.middleRows(H, H).array() * g.middleRows(2 * H, H).array()).matrix();
        hs[t] = (g.bottomRows(H).array() * cs[t].array().tanh()).matrix();
      }
    }

    // Stage 3: dense head on the last hidden state of the last LSTM layer.
    cache.s3_out.assign(stage3_.size(), Matrix());
    for (std::size_t l = 0; l < stage3_.size(); ++l) {
      const Matrix& a = l == 0 ? cache.h[L2 - 1][k] : cache.s3_out[l - 1];
      Matrix& z = cache.s3_out[l];
      z.noalias() = weights(stage3_[l]) * a;
      z.colwise() += bias(stage3_[l]);
      detail::activate(z, stage3_[l].activation);
    }
    return cache.s3_out.back();
  }

  /// Accumulates dLoss/dparams into `grad` given dLoss/doutput (m x batch).
  void backward(const ForwardCache& cache, const Matrix& dout, std::span<double> grad) const {
    if (grad.size() != params_.size()) throw ShapeError("network: gradient buffer size mismatch");
    const std::size_t k = spec_.sequence_length;
    auto gW = [&](std::size_t off, std::size_t r, std::size_t c) {
      return WeightMap(grad.data() + off, Eigen::Index(r), Eigen::Index(c));
    };
    auto gb = [&](std::size_t off, std::size_t r) { return BiasMap(grad.data() + off, Eigen::Index(r)); };

    // Stage 3.
    Matrix d = dout;
    for (std::size_t l = stage3_.size(); l-- > 0;) {
      const auto& lay = stage3_[l];
      detail::activate_backward(d, cache.s3_out[l], lay.activation);
      const Matrix& a = l == 0 ? cache.h.back()[k] : cache.s3_out[l - 1];
      gW(lay.weights, lay.out, lay.in).noalias() += d * a.transpose();
      gb(lay.bias, lay.out) += d.rowwise().sum();
      Matrix prev = weights(lay).transpose() * d;
      d.swap(prev);
    }

    // Stage 2, backpropagation through time, top layer first.
    const std::size_t L2 = stage2_.size();
    std::vector<Matrix> dh_above(k + 1);
    for (auto& m : dh_above) m = Matrix::Zero(d.rows(), d.cols());
    dh_above[k] = d;
    std::vector<Matrix> ds(k + 1);
    for (std::size_t l = L2; l-- > 0;) {
      const auto& lay = stage2_[l];
      const auto H = Eigen::Index(lay.hidden);
      const auto B = Eigen::Index(cache.batch);
      const auto W = weights(lay);
      auto dW = gW(lay.weights, 4 * lay.hidden, lay.cols());
      auto db = gb(lay.bias, 4 * lay.hidden);
      const auto& hs = cache.h[l];
      const auto& cs = cache.c[l];
      const auto& gs = cache.gates[l];
      Matrix dh_next = Matrix::Zero(H, B), dc_next = Matrix::Zero(H, B);
      Matrix dz(4 * H, B);
      for (std::size_t t = k; t >= 1; --t) {
        const Matrix& g = gs[t - 1];
        const auto F = g.topRows(H).array();
        const auto I = g.middleRows(H, H).array();
        const auto Cb = g.middleRows(2 * H, H).array();
        const auto O = g.bottomRows(H).array();
        const Eigen::ArrayXXd tc = cs[t].array().tanh();
        const Eigen::ArrayXXd dh = dh_above[t].array() + dh_next.array();
        const Eigen::ArrayXXd dc = dc_next.array() + dh * O * (1.0 - tc.square());
        dz.topRows(H) = (dc * cs[t - 1].array() * F * (1.0 - F)).matrix();
        dz.middleRows(H, H) = (dc * Cb * I * (1.0 - I)).matrix();
        dz.middleRows(2 * H, H) = (dc * I * (1.0 - Cb.square())).matrix();
        dz.bottomRows(H) = (dh * tc * O * (1.0 - O)).matrix();
        dc_next = (dc * F).matrix();

        const Matrix& s = l == 0 ? stage1_input(cache, cache.input, t - 1) : cache.h[l - 1][t];
        dW.leftCols(H).noalias() += dz * hs[t - 1].transpose();
        dW.rightCols(Eigen::Index(lay.in)).noalias() += dz * s.transpose();
        db += dz.rowwise().sum();
        dh_next.noalias() = W.leftCols(H).transpose() * dz;
        ds[t].noalias() = W.rightCols(Eigen::Index(lay.in)).transpose() * dz;
      }
      for (std::size_t t = 1; t <= k; ++t) dh_above[t].swap(ds[t]);
      dh_above[0].resize(0, 0);
    }

    // Stage 1, per slice with shared parameters.
    for (std::size_t t = 0; t < k; ++t) {
      Matrix dt = dh_above[t + 1];
      for (std::size_t l = stage1_.size(); l-- > 0;) {
        const auto& lay = stage1_[l];
        detail::activate_backward(dt, cache.s1_out[l][t], lay.activation);
        const Matrix& a = l == 0 ? cache.input[t] : cache.s1_out[l - 1][t];
        gW(lay.weights, lay.out, lay.in).noalias() += dt * a.transpose();
        gb(lay.bias, lay.out) += dt.rowwise().sum();
        if (l > 0) {
          Matrix prev = weights(lay).transpose() * dt;
          dt.swap(prev);
        }
      }
    }
  }

 private:
  const Matrix& stage1_input(const ForwardCache& cache, std::span<const Matrix> input, std::size_t t) const {
    return stage1_.empty() ? input[t] : cache.s1_out.back()[t];
  }

  NetworkSpec spec_;
  std::vector<DenseLayout> stage1_;
  std::vector<LstmLayout> stage2_;
  std::vector<DenseLayout> stage3_;
  std::vector<double> params_;
};

/// Glorot-uniform weights (per LSTM gate block: fan_in = H + in, fan_out = H),
/// zero biases, forget-gate bias 1. Draws follow the canonical parameter order.
inline Network init_network(const NetworkSpec& spec, std::uint64_t seed) {
  Network net(spec);
  Rng rng(seed);
  auto fill = [&](auto w, double fan_in, double fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
  };
  for (auto& l : net.stage1()) fill(net.weights(l), double(l.in), double(l.out));
  for (auto& l : net.stage2()) {
    auto W = net.weights(l);
    for (std::size_t g = 0; g < 4; ++g)
      fill(W.middleRows(Eigen::Index(g * l.hidden), Eigen::Index(l.hidden)), double(l.cols()), double(l.hidden));
    net.bias(l).head(Eigen::Index(l.hidden)).setOnes();
  }
  for (auto& l : net.stage3()) fill(net.weights(l), double(l.in), double(l.out));
  return net;
}

/// Per-step trace of a single LSTM layer over one sequence.
struct LstmTrace {
  std::vector<Vector> h, c;                  // t = 0..k, index 0 is the zero state
  std::vector<Vector> forget, input, candidate, output;  // t = 1..k stored at [t-1]
};

/// Runs one LSTM layer of `net` over a single sequence from zero state.
inline LstmTrace lstm_forward(const Network& net, std::size_t layer, std::span<const Vector> seq) {
  if (layer >= net.stage2().size()) throw ShapeError("lstm_forward: no such layer");
  const auto& lay = net.stage2()[layer];
  const auto H = Eigen::Index(lay.hidden);
  const auto W = net.weights(lay);
  const auto b = net.bias(lay);
  LstmTrace tr;
  tr.h.push_back(Vector::Zero(H));
  tr.c.push_back(Vector::Zero(H));
  auto sig = [](const Vector& z) { return Vector((1.0 / (1.0 + (-z.array()).exp())).matrix()); };
  for (const auto& s : seq) {
    if (s.size() != Eigen::Index(lay.in))
      throw ShapeError("lstm_forward: slice has " + std::to_string(s.size()) + " features, layer expects " +
                       std::to_string(lay.in));
    const Vector z = W.leftCols(H) * tr.h.back() + W.rightCols(Eigen::Index(lay.in)) * s + b;
    tr.forget.push_back(sig(z.segment(0, H)));
    tr.input.push_back(sig(z.segment(H, H)));
    tr.candidate.push_back(z.segment(2 * H, H).array().tanh().matrix());
    tr.output.push_back(sig(z.segment(3 * H, H)));
    tr.c.push_back((tr.forget.back().array() * tr.c.back().array() +
                    tr.input.back().array() * tr.candidate.back().array()).matrix());
    tr.h.push_back((tr.output.back().array() * tr.c.back().array().tanh()).matrix());
  }
  return tr;
}

/// Mean over components, then over the batch.
inline double mse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeError("mse_loss: shape mismatch");
  if (pred.size() == 0) return 0.0;
  return (pred - target).squaredNorm() / double(pred.size());
}

inline Matrix mse_loss_gradient(const Matrix& pred, const Matrix& target) {
  return 2.0 * (pred - target) / double(pred.size());
}

/// Prediction for one window given as k slices of input features.
inline Vector stage_forward(const Network& net, std::span<const std::vector<double>> slices) {
  std::vector<Matrix> in;
  for (const auto& s : slices) in.push_back(Eigen::Map<const Matrix>(s.data(), Eigen::Index(s.size()), 1));
  ForwardCache cache;
  return net.forward(in, cache).col(0);
}

/// Gradient of the batch loss w.r.t. every parameter (flat canonical order).
inline std::vector<double> backward(const Network& net, std::span<const Matrix> input, const Matrix& target,
                                    double* loss = nullptr) {
  ForwardCache cache;
  const Matrix pred = net.forward(input, cache);
  if (loss) *loss = mse_loss(pred, target);
  std::vector<double> grad(net.parameter_count(), 0.0);
  net.backward(cache, mse_loss_gradient(pred, target), grad);
  return grad;
}

}  // namespace gapbridge::nn
