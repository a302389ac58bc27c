#include <gtest/gtest.h>

#include <filesystem>

#include "gapbridge/dataset/normalize.hpp"
#include "gapbridge/nn/adam.hpp"
#include "gapbridge/nn/checkpoint.hpp"
#include "gapbridge/nn/network.hpp"
#include "gapbridge/nn/trainer.hpp"
#include "gapbridge/rng.hpp"
#include "oracles.hpp"

using namespace gapbridge;
using namespace gapbridge::nn;

namespace {

std::vector<Matrix> random_input(std::size_t features, std::size_t k, Eigen::Index batch, Rng& rng) {
  std::vector<Matrix> x(k, Matrix(Eigen::Index(features), batch));
  for (auto& m : x)
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.5, 1.5);
  return x;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
  return m;
}

NetworkSpec random_spec(Rng& rng) {
  const Activation acts[] = {Activation::relu, Activation::tanh, Activation::linear};
  NetworkSpec s;
  s.input_features = 1 + rng.below(5);
  s.sequence_length = 3;
  for (std::size_t i = 0, n = rng.below(3); i < n; ++i) s.stage1.push_back({1 + rng.below(5), acts[rng.below(3)]});
  for (std::size_t i = 0, n = 1 + rng.below(2); i < n; ++i) s.stage2.push_back(1 + rng.below(5));
  for (std::size_t i = 0, n = rng.below(2); i < n; ++i) s.stage3.push_back({1 + rng.below(5), acts[rng.below(3)]});
  s.stage3.push_back({1 + rng.below(3), Activation::linear});
  return s;
}

// Small window set for training tests: target = oldest value of the left stencil neighbour.
dataset::WindowSet copy_task(std::size_t points, std::size_t frames, std::uint64_t seed) {
  Rng rng(seed);
  const auto g = Grid::line(points, 1.0);
  Trajectory curr(g, 0.1, 1, {"u"}, ""), act(g, 0.1, 1, {"u"}, "");
  std::vector<std::vector<double>> v(frames, std::vector<double>(points));
  for (auto& f : v)
    for (auto& x : f) x = rng.uniform(-1, 1);
  for (std::size_t t = 0; t < frames; ++t) {
    curr.push_frame(v[t]);
    std::vector<double> a(points, 0.0);
    if (t >= 2)
      for (std::size_t p = 1; p < points; ++p) a[p] = v[t - 2][p - 1];
    act.push_frame(a);
  }
  return dataset::build_windows(curr, std::nullopt, act);
}

NetworkSpec small_spec(std::size_t features) {
  return {features, 3, {{8, Activation::relu}}, {8}, {{1, Activation::linear}}};
}

}  // namespace

TEST(Init, SameSeedSameParameters) {
  const auto s = NetworkSpec::one_tddl(5, 3, 1);
  const auto a = init_network(s, 9), b = init_network(s, 9), c = init_network(s, 10);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
  EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
}

TEST(Init, DenseGlorotBound) {
  const NetworkSpec s{4, 1, {{3, Activation::relu}}, {2}, {{1, Activation::linear}}};
  const auto net = init_network(s, 1);
  const auto W = net.weights(net.stage1()[0]);
  EXPECT_EQ(W.size(), 12);
  const double bound = std::sqrt(6.0 / 7.0);
  double mx = 0.0;
  for (Eigen::Index i = 0; i < W.size(); ++i) mx = std::max(mx, std::abs(W.data()[i]));
  EXPECT_LE(mx, bound);
  EXPECT_GT(mx, 0.0);
}

TEST(Init, LstmGateBlocksAndForgetBias) {
  const NetworkSpec s{3, 3, {}, {4}, {{1, Activation::linear}}};
  const auto net = init_network(s, 2);
  const auto& l = net.stage2()[0];
  const auto b = net.bias(l);
  for (Eigen::Index i = 0; i < 16; ++i) EXPECT_EQ(b(i), i < 4 ? 1.0 : 0.0);
  const double bound = std::sqrt(6.0 / (7.0 + 4.0));
  EXPECT_LE(net.weights(l).cwiseAbs().maxCoeff(), bound);
}

TEST(Init, EmpiricalMeanWithinThreeSigma) {
  const NetworkSpec s{20, 1, {{20, Activation::relu}}, {1}, {{1, Activation::linear}}};
  double sum = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto net = init_network(s, seed);
    const auto W = net.weights(net.stage1()[0]);
    for (Eigen::Index i = 0; i < W.size(); ++i) sum += W.data()[i];
    n += std::size_t(W.size());
  }
  const double bound = std::sqrt(6.0 / 40.0), sigma = bound / std::sqrt(3.0);
  EXPECT_LE(std::abs(sum / double(n)), 3.0 * sigma / std::sqrt(double(n)));
}

TEST(Lstm, ZeroParametersGiveZeroState) {
  const NetworkSpec s{3, 3, {}, {5}, {{1, Activation::linear}}};
  Network net(s);
  Rng rng(1);
  std::vector<Vector> seq;
  for (int t = 0; t < 3; ++t) seq.push_back(Vector::Random(3));
  const auto tr = lstm_forward(net, 0, seq);
  for (auto& h : tr.h) EXPECT_EQ(h.cwiseAbs().maxCoeff(), 0.0);
  for (auto& c : tr.c) EXPECT_EQ(c.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Lstm, ScalarCellMatchesHandRecurrence) {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const NetworkSpec s{1, 5, {}, {1}, {{1, Activation::linear}}};
    Network net(s);
    oracle::ScalarLstm o{};
    double* wrows[4] = {o.wf, o.wi, o.wc, o.wo};
    double* bs[4] = {&o.bf, &o.bi, &o.bc, &o.bo};
    auto W = net.weights(net.stage2()[0]);
    auto b = net.bias(net.stage2()[0]);
    for (int g = 0; g < 4; ++g) {
      wrows[g][0] = W(g, 0) = rng.uniform(-2, 2);
      wrows[g][1] = W(g, 1) = rng.uniform(-2, 2);
      *bs[g] = b(g) = rng.uniform(-1, 1);
    }
    std::vector<Vector> seq;
    double h = 0, c = 0;
    std::vector<double> hs;
    for (int t = 0; t < 5; ++t) {
      const double s_t = rng.uniform(-1, 1);
      seq.push_back(Vector::Constant(1, s_t));
      std::tie(h, c) = o.step(h, c, s_t);
      hs.push_back(h);
    }
    const auto tr = lstm_forward(net, 0, seq);
    for (int t = 0; t < 5; ++t) EXPECT_NEAR(tr.h[t + 1](0), hs[t], 1e-14);
  }
}

TEST(Lstm, ConstantGatesFollowScalarRecurrence) {
  // W_F = W_I = W_O = 0: C_t = sig(bF) C_{t-1} + sig(bI) tanh(w s_t + u h_{t-1} + bC)
  const NetworkSpec s{1, 4, {}, {1}, {{1, Activation::linear}}};
  Network net(s);
  auto W = net.weights(net.stage2()[0]);
  auto b = net.bias(net.stage2()[0]);
  b << 0.3, -0.2, 0.1, 0.7;
  W(2, 0) = 0.4;
  W(2, 1) = 1.1;
  const double sf = 1 / (1 + std::exp(-0.3)), si = 1 / (1 + std::exp(0.2)), so = 1 / (1 + std::exp(-0.7));
  const double in[4] = {0.5, -1.0, 0.25, 2.0};
  double h = 0, c = 0;
  std::vector<Vector> seq;
  for (double x : in) seq.push_back(Vector::Constant(1, x));
  const auto tr = lstm_forward(net, 0, seq);
  for (int t = 0; t < 4; ++t) {
    c = sf * c + si * std::tanh(1.1 * in[t] + 0.4 * h + 0.1);
    h = so * std::tanh(c);
    EXPECT_NEAR(tr.c[t + 1](0), c, 1e-15);
    EXPECT_NEAR(tr.h[t + 1](0), h, 1e-15);
    EXPECT_NEAR(tr.forget[t](0), sf, 1e-15);
  }
}

TEST(Lstm, GateCodomains) {
  Rng rng(3);
  const NetworkSpec s{4, 6, {}, {7}, {{1, Activation::linear}}};
  auto net = init_network(s, 4);
  for (auto& p : net.parameters()) p *= 5.0;
  std::vector<Vector> seq;
  for (int t = 0; t < 6; ++t) seq.push_back(Vector::Random(4) * 3.0);
  const auto tr = lstm_forward(net, 0, seq);
  for (int t = 0; t < 6; ++t) {
    for (const Vector* g : {&tr.forget[t], &tr.input[t], &tr.output[t]}) {
      EXPECT_GT(g->minCoeff(), 0.0);
      EXPECT_LT(g->maxCoeff(), 1.0);
    }
    EXPECT_LT(tr.h[t + 1].cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(Network, BatchedForwardMatchesPerSampleLstmTrace) {
  Rng rng(8);
  const NetworkSpec s{3, 3, {}, {4}, {{1, Activation::linear}}};
  auto net = init_network(s, 5);
  const auto x = random_input(3, 3, 6, rng);
  ForwardCache cache;
  const Matrix y = net.forward(x, cache);
  const auto& head = net.stage3()[0];
  for (Eigen::Index b = 0; b < 6; ++b) {
    std::vector<Vector> seq;
    for (auto& m : x) seq.push_back(m.col(b));
    const auto tr = lstm_forward(net, 0, seq);
    const double expect = (net.weights(head) * tr.h.back() + net.bias(head))(0);
    EXPECT_NEAR(y(0, b), expect, 1e-13);
  }
}

TEST(Network, ZeroParametersPredictZero) {
  Network net(NetworkSpec::one_tddl(5, 3, 1));
  std::vector<std::vector<double>> slices(3, std::vector<double>{1, 2, 3, 4, 5});
  EXPECT_EQ(stage_forward(net, slices)(0), 0.0);
}

TEST(Network, PaperShapes) {
  auto one = init_network(NetworkSpec::one_tddl(5, 3, 1), 1);
  std::vector<std::vector<double>> slices(3, std::vector<double>(5, 0.3));
  EXPECT_EQ(stage_forward(one, slices).size(), 1);
  EXPECT_EQ(one.parameter_count(), 192u + 24832u + 12416u + 8320u + 330u + 11u);
  auto two = init_network(NetworkSpec::two_tddl(39, 3, 2), 1);
  std::vector<std::vector<double>> s2(3, std::vector<double>(39, 0.1));
  EXPECT_EQ(stage_forward(two, s2).size(), 2);
  EXPECT_EQ(two.spec().stage1.size(), 2u);
  EXPECT_EQ(two.spec().stage1[1].width, 64u);
  EXPECT_THROW(one.spec().validate_for(6, 3, 1), ShapeError);
}

TEST(Loss, Examples) {
  Matrix p(1, 1), t(1, 1);
  p << 1;
  t << 3;
  EXPECT_EQ(mse_loss(p, t), 4.0);
  Matrix p2 = Matrix::Zero(2, 1), t2 = Matrix::Ones(2, 1);
  EXPECT_EQ(mse_loss(p2, t2), 1.0);
  EXPECT_EQ(mse_loss(t2, t2), 0.0);
}

TEST(Backward, MatchesFiniteDifferencesOnRandomNetworks) {
  Rng rng(20240611);
  double worst = 0.0;
  for (int trial = 0; trial < 24; ++trial) {
    const auto spec = random_spec(rng);
    auto net = init_network(spec, 100 + trial);
    for (auto& p : net.parameters()) p += rng.uniform(-0.3, 0.3);
    const auto x = random_input(spec.input_features, 3, 4, rng);
    const Matrix y = random_matrix(Eigen::Index(spec.output_width()), 4, rng);
    const auto grad = backward(net, x, y);
    std::vector<double> p0(net.parameters().begin(), net.parameters().end());
    auto loss = [&](const std::vector<double>& p) {
      std::copy(p.begin(), p.end(), net.parameters().begin());
      ForwardCache c;
      return mse_loss(net.forward(x, c), y);
    };
    const auto fd = oracle::fd_gradient(loss, p0, 1e-5);
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const double rel = std::abs(grad[i] - fd[i]) / std::max({std::abs(grad[i]), std::abs(fd[i]), 1e-6});
      worst = std::max(worst, rel);
      ASSERT_LT(rel, 1e-4) << "trial " << trial << " parameter " << i << " analytic " << grad[i] << " fd " << fd[i];
    }
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Backward, ZeroErrorGivesZeroGradient) {
  Rng rng(4);
  auto net = init_network(NetworkSpec{3, 3, {{4, Activation::relu}}, {3}, {{2, Activation::linear}}}, 1);
  const auto x = random_input(3, 3, 5, rng);
  ForwardCache c;
  const Matrix y = net.forward(x, c);
  for (double g : backward(net, x, y)) ASSERT_EQ(g, 0.0);
}

TEST(Backward, DuplicatedSampleHasMeanSemantics) {
  Rng rng(6);
  auto net = init_network(NetworkSpec{2, 3, {{3, Activation::tanh}}, {2}, {{1, Activation::linear}}}, 3);
  const auto x1 = random_input(2, 3, 1, rng);
  const Matrix y1 = random_matrix(1, 1, rng);
  std::vector<Matrix> x2;
  for (auto& m : x1) x2.push_back(m.replicate(1, 2));
  const auto g1 = backward(net, x1, y1);
  const auto g2 = backward(net, x2, y1.replicate(1, 2));
  for (std::size_t i = 0; i < g1.size(); ++i) ASSERT_NEAR(g1[i], g2[i], 1e-15 + 1e-12 * std::abs(g1[i]));
}

TEST(Backward, AccumulatesIntoGradientBuffer) {
  Rng rng(7);
  auto net = init_network(NetworkSpec{2, 3, {}, {2}, {{1, Activation::linear}}}, 3);
  const auto x = random_input(2, 3, 3, rng);
  const Matrix y = random_matrix(1, 3, rng);
  ForwardCache c;
  const Matrix p = net.forward(x, c);
  std::vector<double> g(net.parameter_count(), 0.0);
  net.backward(c, mse_loss_gradient(p, y), g);
  net.backward(c, mse_loss_gradient(p, y), g);
  const auto once = backward(net, x, y);
  for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(g[i], 2.0 * once[i], 1e-15);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> w{0.5};
  std::vector<double> g{1.0};
  AdamState s(1);
  adam_step(w, g, s);
  EXPECT_NEAR(w[0], 0.5 - 0.001 / (1.0 + 1e-8), 1e-15);
  std::vector<double> w2{0.5};
  std::vector<double> g2{-250.0};
  AdamState s2(1);
  adam_step(w2, g2, s2);
  EXPECT_NEAR(w2[0], 0.501, 1e-12);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> w{1.0, -2.0, 3.0}, g(3, 0.0);
  AdamState s(3);
  for (int i = 0; i < 10; ++i) adam_step(w, g, s);
  EXPECT_EQ(w, (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(Adam, MinimisesSquare) {
  // Oracle: the same recursion written out by hand.
  std::vector<double> w{1.0};
  AdamState s(1);
  AdamConfig cfg;
  double m = 0, v = 0, ref = 1.0, prev = 1.0;
  for (int t = 1; t <= 100; ++t) {
    std::vector<double> g{2.0 * w[0]};
    adam_step(w, g, s, cfg);
    const double gr = 2.0 * ref;
    m = 0.9 * m + 0.1 * gr;
    v = 0.999 * v + 0.001 * gr * gr;
    ref -= 0.001 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    ASSERT_NEAR(w[0], ref, 1e-15);
    ASSERT_LT(w[0], prev);
    ASSERT_GT(w[0], 0.0);
    prev = w[0];
  }
  EXPECT_LT(std::abs(w[0]), 1.0);
}

TEST(Train, LearnsCopyTask) {
  const auto w = copy_task(52, 22, 1);
  ASSERT_EQ(w.size(), 1000u);
  const auto nb = dataset::normalize(w, dataset::split_dataset(w, 22, {1.0, 0.0, 0.0}, 1));
  auto net = init_network(small_spec(w.feature_count()), 2);
  AdamState st;
  TrainConfig tc;
  tc.shuffle_seed = 3;
  tc.epochs = 150;
  tc.adam.learning_rate = 3e-3;
  const auto h = train(net, w, nb, st, tc);
  ASSERT_EQ(h.epochs.size(), 150u);
  EXPECT_LT(h.epochs.back().train_loss, 1e-3);
  EXPECT_LT(h.epochs.back().train_loss, h.epochs.front().train_loss);
}

TEST(Train, ZeroEpochsLeavesNetwork) {
  const auto w = copy_task(12, 8, 2);
  const auto nb = dataset::normalize(w, dataset::split_dataset(w, 6, {}, 1));
  auto net = init_network(small_spec(w.feature_count()), 2);
  const std::vector<double> before(net.parameters().begin(), net.parameters().end());
  AdamState st;
  TrainConfig tc;
  tc.epochs = 0;
  EXPECT_TRUE(train(net, w, nb, st, tc).epochs.empty());
  EXPECT_TRUE(std::equal(before.begin(), before.end(), net.parameters().begin()));
}

TEST(Train, BitIdenticalWithSameSeeds) {
  const auto w = copy_task(20, 12, 3);
  const auto nb = dataset::normalize(w, dataset::split_dataset(w, 8, {}, 1));
  auto run = [&] {
    auto net = init_network(small_spec(w.feature_count()), 4);
    AdamState st;
    TrainConfig tc;
    tc.epochs = 5;
    tc.batch_size = 16;
    tc.shuffle_seed = 9;
    return std::pair{train(net, w, nb, st, tc), std::vector<double>(net.parameters().begin(), net.parameters().end())};
  };
  const auto [h1, p1] = run();
  const auto [h2, p2] = run();
  ASSERT_EQ(h1.epochs.size(), h2.epochs.size());
  for (std::size_t e = 0; e < h1.epochs.size(); ++e) {
    EXPECT_EQ(h1.epochs[e].train_loss, h2.epochs[e].train_loss);
    EXPECT_EQ(h1.epochs[e].val_loss, h2.epochs[e].val_loss);
  }
  EXPECT_EQ(p1, p2);
}

TEST(Train, NonFiniteLossReportsEpoch) {
  const auto w = copy_task(12, 8, 4);
  const auto nb = dataset::normalize(w, dataset::split_dataset(w, 6, {}, 1));
  auto net = init_network(small_spec(w.feature_count()), 2);
  net.parameters()[0] = std::numeric_limits<double>::quiet_NaN();
  AdamState st;
  TrainConfig tc;
  try {
    train(net, w, nb, st, tc);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST(Predict, TrainingFramesReproduceReportedLoss) {
  const auto w = copy_task(30, 14, 5);
  const auto nb = dataset::normalize(w, dataset::split_dataset(w, 10, {}, 2));
  auto net = init_network(small_spec(w.feature_count()), 6);
  AdamState st;
  TrainConfig tc;
  tc.epochs = 3;
  const auto h = train(net, w, nb, st, tc);
  const auto f = predict_field(net, w, nb.stats, 2, 14);
  double sum = 0.0;
  for (auto id : nb.split.train) {
    const auto c = w.center(id);
    const double d = f.at(c.frame, c.point) - w.act().at(c.frame, c.point);
    sum += d * d;
  }
  EXPECT_NEAR(sum / double(nb.split.train.size()), h.epochs.back().train_loss, 1e-10);
  EXPECT_EQ(f.present_points().size(), 28u);
  EXPECT_TRUE(std::isnan(f.at(5, 0)));
}

TEST(Predict, FutureFrameCount) {
  const auto g = Grid::line(50, 1.0);
  Trajectory t(g, 0.1, 1, {"u"}, "");
  for (int i = 0; i < 500; ++i) t.push_frame(std::vector<double>(50, 0.01 * i));
  const auto w = dataset::build_windows(t, std::nullopt, t);
  Network zero(NetworkSpec::one_tddl(w.feature_count(), 3, 1));
  const auto f = predict_field(zero, w, dataset::NormStats::identity(w.feature_count()), 150, 500);
  std::size_t n = 0;
  for (std::size_t fr = 150; fr < 500; ++fr)
    for (auto p : f.present_points()) {
      EXPECT_EQ(f.at(fr, p), 0.0);
      ++n;
    }
  EXPECT_EQ(n, 16800u);
}

TEST(Checkpoint, RoundTripBitIdentical) {
  const auto dir = std::filesystem::temp_directory_path() / "gapbridge_ckpt";
  std::filesystem::remove_all(dir);
  auto net = init_network(NetworkSpec::two_tddl(11, 3, 2), 42);
  CheckpointInfo info{42, 43, "norm.csv", 7, 0.125, 0.25};
  save_checkpoint(net, info, dir / "c.ckpt");
  const auto ck = load_checkpoint(dir / "c.ckpt");
  EXPECT_EQ(ck.network.spec().stage1, net.spec().stage1);
  EXPECT_EQ(ck.network.spec().stage2, net.spec().stage2);
  EXPECT_EQ(ck.network.spec().stage3, net.spec().stage3);
  EXPECT_TRUE(std::equal(net.parameters().begin(), net.parameters().end(), ck.network.parameters().begin()));
  EXPECT_EQ(ck.info.init_seed, 42u);
  EXPECT_EQ(ck.info.norm_stats, "norm.csv");
  EXPECT_EQ(ck.info.final_val_loss, 0.25);
}

TEST(Checkpoint, TruncatedPayloadRejected) {
  const auto dir = std::filesystem::temp_directory_path() / "gapbridge_ckpt_bad";
  std::filesystem::remove_all(dir);
  auto net = init_network(small_spec(4), 1);
  save_checkpoint(net, {}, dir / "c.ckpt");
  const auto bin = payload_path(dir / "c.ckpt");
  std::filesystem::resize_file(bin, std::filesystem::file_size(bin) - 16);
  EXPECT_THROW(load_checkpoint(dir / "c.ckpt"), FormatError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), MissingArtifact);
}
