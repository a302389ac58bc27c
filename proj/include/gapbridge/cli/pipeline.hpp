#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gapbridge/cli/config.hpp"
#include "gapbridge/dataset/normalize.hpp"
#include "gapbridge/dataset/split.hpp"
#include "gapbridge/dataset/windows.hpp"
#include "gapbridge/error.hpp"
#include "gapbridge/metrics/horizon.hpp"
#include "gapbridge/metrics/pod.hpp"
#include "gapbridge/metrics/report.hpp"
#include "gapbridge/metrics/spectrum.hpp"
#include "gapbridge/nn/checkpoint.hpp"
#include "gapbridge/nn/trainer.hpp"
#include "gapbridge/solver/heat1d.hpp"
#include "gapbridge/solver/lid_cavity.hpp"
#include "gapbridge/trajectory_io.hpp"

namespace gapbridge::cli {

// File names inside the run directory.
namespace files {
inline constexpr const char* act = "act.traj";
inline constexpr const char* curr = "curr.traj";
inline constexpr const char* aux = "aux.traj";
inline constexpr const char* split_dir = "split";
inline constexpr const char* norm_stats = "norm_stats.csv";
inline constexpr const char* checkpoint = "checkpoint.ckpt";
inline constexpr const char* history = "history.csv";
inline constexpr const char* metrics = "metrics.csv";
inline constexpr const char* pod = "pod.csv";
inline constexpr const char* horizon = "horizon.csv";
inline constexpr const char* fft = "fft.csv";
inline constexpr const char* field = "field_nn.csv";
}  // namespace files

inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  if (dynamic_cast<const MissingArtifact*>(&e)) return 4;
  return 1;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct StageRecord {
  std::string name;
  std::string status;  // ok | failed
  double seconds = 0.0;
  std::string message;
};

struct RunRecord {
  std::string command;
  std::string config_hash;
  std::string started, finished;
  std::string status = "running";
  std::uint64_t seed = 0;
  std::map<std::string, std::string> artifacts;
  std::vector<StageRecord> stages;
  std::string error;
  int exit_code = 0;

  bool ok() const { return status == "ok"; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["started"] = started;
    j["finished"] = finished;
    j["status"] = status;
    j["seed"] = seed;
    j["artifacts"] = artifacts;
    j["stages"] = nlohmann::json::array();
    for (auto& s : stages)
      j["stages"].push_back({{"name", s.name}, {"status", s.status}, {"seconds", s.seconds}, {"message", s.message}});
    if (!error.empty()) j["error"] = error;
    j["exit_code"] = exit_code;
    return j;
  }

  void write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / ("run_" + command + ".json"));
    os << to_json().dump(2) << '\n';
  }
};

/// Runs named stages, recording status and timing. The first failure is
/// recorded and rethrown.
class StageRunner {
 public:
  StageRunner(RunRecord& r, std::ostream* log) : r_(r), log_(log) {}

  template <typename F>
  auto operator()(const std::string& name, F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&](const char* status, std::string msg) {
      r_.stages.push_back(
          {name, status, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), std::move(msg)});
      if (log_) *log_ << "[" << r_.command << "] " << name << ": " << status << '\n';
    };
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        finish("ok", "");
      } else {
        auto v = fn();
        finish("ok", "");
        return v;
      }
    } catch (const std::exception& e) {
      finish("failed", e.what());
      throw;
    }
  }

 private:
  RunRecord& r_;
  std::ostream* log_;
};

struct RunOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::uint64_t> seed;
  std::ostream* log = &std::cerr;
};

inline void apply_options(ExperimentConfig& c, const RunOptions& o) {
  if (o.out) c.output_dir = *o.out;
  if (o.seed) c.override_seed(*o.seed);
}

// ---------------------------------------------------------------------------
// Data access

struct ExperimentData {
  Trajectory act, curr;
  std::optional<Trajectory> aux;
  std::vector<bool> mask;
};

inline std::vector<bool> load_mask(const std::filesystem::path& path, std::size_t points) {
  std::ifstream is(path);
  if (!is) throw MissingArtifact("cannot open mask " + path.string());
  std::vector<bool> mask;
  std::string tok;
  while (is >> tok) {
    for (auto& part : io::split(tok)) {
      const auto t = io::trim(part);
      if (t.empty()) continue;
      if (t != "0" && t != "1") throw FormatError("mask " + path.string() + ": expected 0/1, got '" + t + "'");
      mask.push_back(t == "1");
    }
  }
  if (mask.size() != points)
    throw FormatError("mask " + path.string() + ": expected " + std::to_string(points) + " values, found " +
                      std::to_string(mask.size()));
  return mask;
}

inline ExperimentData load_data(const ExperimentConfig& c) {
  auto get = [&](const std::filesystem::path& p) {
    auto t = load_trajectory(p);
    if (c.use_frames > 0 && c.use_frames < t.frame_count()) t = t.slice(0, c.use_frames);
    return t;
  };
  if (c.system == SystemId::external) {
    ExperimentData d{get(c.external.act), get(c.external.curr), std::nullopt, {}};
    if (!c.external.aux.empty()) d.aux = get(c.external.aux);
    if (!c.external.mask.empty()) d.mask = load_mask(c.external.mask, d.act.grid().point_count());
    return d;
  }
  ExperimentData d{get(c.path(files::act)), get(c.path(files::curr)), std::nullopt, {}};
  if (c.system == SystemId::lidcavity2d) d.aux = get(c.path(files::aux));
  return d;
}

inline dataset::WindowSet make_windows(const ExperimentConfig& c, const ExperimentData& d) {
  dataset::WindowOptions o;
  o.k = c.k;
  o.mask = d.mask;
  // Time coordinate: 0 at the first frame, 1 at the last training frame.
  o.time_extent = double(std::max<std::size_t>(c.training_frames, 2) - 1) * d.act.dt();
  return dataset::build_windows(d.curr, d.aux, d.act, o);
}

inline nn::NetworkSpec network_spec(const ExperimentConfig& c, const dataset::WindowSet& w) {
  auto s = c.network;
  s.input_features = w.feature_count();
  s.sequence_length = w.k();
  if (!s.stage3.empty()) s.stage3.back().width = w.target_components();
  s.validate();
  return s;
}

/// Restores the stored split when present; otherwise rebuilds it from the config seed.
inline dataset::SplitBundle make_split(const ExperimentConfig& c, const dataset::WindowSet& w) {
  auto b = dataset::split_dataset(w, c.training_frames, c.fractions, c.split_seed);
  const auto dir = c.path(files::split_dir);
  if (!std::filesystem::exists(dir / "split.manifest")) return b;
  const auto stored = dataset::load_split(dir);
  if (stored.training_frames != c.training_frames || stored.map.size() != b.points.size())
    throw ConfigError("stored split in " + dir.string() + " does not match the config (K or point count)");
  if (stored.seed == b.seed) return b;
  return dataset::split_dataset(w, c.training_frames, stored.fractions, stored.seed);
}

inline std::filesystem::path checkpoint_path(const ExperimentConfig& c, const RunOptions& o) {
  return o.checkpoint ? *o.checkpoint : c.path(files::checkpoint);
}

/// U_nn over frames [k-1, N); in self-test mode U_act stands in for the network.
inline nn::PredictedField predicted(const ExperimentConfig& c, const ExperimentData& d, const dataset::WindowSet& w,
                                    const std::filesystem::path& ckpt, RunRecord& rec) {
  if (c.self_test) {
    nn::PredictedField f;
    f.grid = d.act.grid();
    f.components = d.act.components();
    f.first_frame = w.first_frame();
    f.frames = w.frame_count() - w.first_frame();
    f.present.assign(f.grid.point_count(), false);
    for (auto p : w.eligible_points()) f.present[p] = true;
    const auto all = d.act.values();
    const std::size_t stride = f.grid.point_count() * f.components;
    f.values.assign(all.begin() + std::ptrdiff_t(f.first_frame * stride), all.end());
    for (std::size_t p = 0; p < f.grid.point_count(); ++p)
      if (!f.present[p])
        for (std::size_t t = 0; t < f.frames; ++t)
          for (std::size_t k = 0; k < f.components; ++k)
            f.values[(t * f.grid.point_count() + p) * f.components + k] = std::numeric_limits<double>::quiet_NaN();
    return f;
  }
  auto cp = nn::load_checkpoint(ckpt);
  rec.artifacts["checkpoint"] = ckpt.string();
  const auto stats = dataset::load_norm_stats(ckpt.parent_path() / cp.info.norm_stats);
  return nn::predict_field(cp.network, w, stats, w.first_frame(), w.frame_count());
}

inline Eigen::MatrixXd snapshot_matrix(const nn::PredictedField& f, std::span<const std::size_t> points,
                                       std::size_t first, std::size_t last) {
  Eigen::MatrixXd X(Eigen::Index(points.size() * f.components), Eigen::Index(last - first));
  for (std::size_t t = first; t < last; ++t)
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t k = 0; k < f.components; ++k)
        X(Eigen::Index(i * f.components + k), Eigen::Index(t - first)) = f.at(t, points[i], k);
  return X;
}

struct PodComparison {
  metrics::PODBasis act, curr;
  std::optional<metrics::PODBasis> nn;
};

/// POD over every present point of frames [k-1, N).
inline PodComparison pod_compare(const ExperimentConfig& c, const ExperimentData& d, const nn::PredictedField* f,
                                 const dataset::WindowSet& w) {
  const auto pts = w.eligible_points();
  const auto a = w.first_frame(), b = w.frame_count();
  PodComparison r{metrics::pod_decompose(metrics::snapshot_matrix(d.act, pts, a, b), c.pod_energy),
                  metrics::pod_decompose(metrics::snapshot_matrix(d.curr, pts, a, b), c.pod_energy),
                  std::nullopt};
  if (f) r.nn = metrics::pod_decompose(snapshot_matrix(*f, pts, a, b), c.pod_energy);
  return r;
}

inline void write_pod_csv(const PodComparison& p, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << "trajectory,mode,eigenvalue,cumulative_energy,retained,cs_pod_vs_act\n";
  auto put = [&](const char* name, const metrics::PODBasis& b, const std::vector<double>& cs) {
    const double total = b.eigenvalues.sum();
    double cum = 0.0;
    for (Eigen::Index i = 0; i < b.eigenvalues.size(); ++i) {
      cum += b.eigenvalues(i);
      const auto m = std::size_t(i);
      os << name << ',' << m + 1 << ',' << io::fmt17(b.eigenvalues(i)) << ',' << io::fmt17(total > 0 ? cum / total : 0)
         << ',' << (m < b.retained() ? 1 : 0) << ',' << (m < cs.size() ? io::fmt17(cs[m]) : "") << '\n';
    }
  };
  put("act", p.act, {});
  put("curr", p.curr, metrics::cs_pod(p.act, p.curr));
  if (p.nn) put("nn", *p.nn, metrics::cs_pod(p.act, *p.nn));
}

inline std::pair<std::size_t, std::size_t> future_range(const ExperimentConfig& c, const dataset::WindowSet& w,
                                                        std::size_t first, std::size_t last) {
  const std::size_t a = first ? first : c.training_frames;
  const std::size_t b = last ? last : w.frame_count();
  if (a < w.first_frame() || b > w.frame_count() || a + 2 > b)
    throw ConfigError("frame range [" + std::to_string(a) + ", " + std::to_string(b) + ") is not usable");
  return {a, b};
}

inline std::vector<metrics::ComparisonRow> horizon_rows(const ExperimentConfig& c, const ExperimentData& d,
                                                        const nn::PredictedField& f, const dataset::WindowSet& w) {
  const auto [a, b] = future_range(c, w, c.horizon_start, c.horizon_end);
  return metrics::horizon_evaluation(f, d.curr, d.act, a, c.horizon_interval, b);
}

struct FftResult {
  std::size_t first = 0, last = 0;
  metrics::FrequencyDiff curr, nn;
};

inline FftResult fft_compare(const ExperimentConfig& c, const ExperimentData& d, const nn::PredictedField& f,
                             const dataset::WindowSet& w) {
  const auto [a, b] = future_range(c, w, c.fft_first, c.fft_last);
  const auto pts = w.eligible_points();
  const auto m = d.act.components();
  return {a, b, metrics::freq_percent_diff(d.curr, d.act, m, pts, a, b, d.act.dt(), c.fft_component),
          metrics::freq_percent_diff(f, d.act, m, pts, a, b, d.act.dt(), c.fft_component)};
}

inline void write_fft_csv(const FftResult& r, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << "series,first_frame,last_frame,mean_rel_diff,points_used,points_skipped\n";
  for (auto [name, v] : {std::pair{"curr", &r.curr}, std::pair{"nn", &r.nn}})
    os << name << ',' << r.first << ',' << r.last << ',' << io::fmt17(v->mean) << ',' << v->used << ',' << v->skipped
       << '\n';
}

inline void write_rows_csv(const std::vector<metrics::ComparisonRow>& rows, const std::filesystem::path& path) {
  metrics::MetricReport r;
  r.rows = rows;
  r.write_csv(path);
}

inline void export_field(const nn::PredictedField& f, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  const auto& g = f.grid;
  os << "frame,x" << (g.dims == 2 ? ",y" : "");
  for (std::size_t k = 0; k < f.components; ++k) os << ",c" << k;
  os << '\n';
  for (std::size_t t = f.first_frame; t < f.last_frame(); ++t)
    for (std::size_t p = 0; p < g.point_count(); ++p) {
      if (!f.present[p]) continue;
      os << t << ',' << io::fmt17(g.coord(0, p % g.nx()));
      if (g.dims == 2) os << ',' << io::fmt17(g.coord(1, p / g.nx()));
      for (std::size_t k = 0; k < f.components; ++k) os << ',' << io::fmt17(f.at(t, p, k));
      os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Commands

namespace detail {

inline RunRecord run(const std::string& command, ExperimentConfig c, const RunOptions& o,
                     const std::function<void(ExperimentConfig&, RunRecord&, StageRunner&)>& body) {
  apply_options(c, o);
  RunRecord rec;
  rec.command = command;
  rec.seed = c.split_seed;
  {
    std::ostringstream h;
    h << std::hex << std::setw(16) << std::setfill('0') << fnv1a(c.text);
    rec.config_hash = h.str();
  }
  rec.started = utc_now();
  StageRunner stage(rec, o.log);
  try {
    body(c, rec, stage);
    rec.status = "ok";
  } catch (const std::exception& e) {
    rec.status = "failed";
    rec.error = e.what();
    rec.exit_code = exit_code(e);
  }
  rec.finished = utc_now();
  try {
    rec.write(c.output_dir);
  } catch (const std::exception& e) {
    if (o.log) *o.log << "cannot write run record: " << e.what() << '\n';
  }
  return rec;
}

}  // namespace detail

inline RunRecord cmd_generate(const ExperimentConfig& config, const RunOptions& o = {}) {
  return detail::run("generate", config, o, [&](ExperimentConfig& c, RunRecord& rec, StageRunner& stage) {
    if (c.system == SystemId::external)
      throw ConfigError("generation unsupported for external systems; use ingestion ([external] paths)");
    std::filesystem::create_directories(c.output_dir);
    auto save = [&](const Trajectory& t, const char* name, const char* key) {
      save_trajectory(t, c.path(name));
      rec.artifacts[key] = c.path(name).string();
    };
    if (c.system == SystemId::heat1d) {
      auto h = c.heat;
      h.diffusivity = c.d_act;
      const auto act = stage("solve_act", [&] { return solver::solve_heat_1d(h, "heat1d-act"); });
      h.diffusivity = c.d_curr;
      const auto curr = stage("solve_curr", [&] { return solver::solve_heat_1d(h, "heat1d-curr"); });
      stage("write", [&] {
        save(act, files::act, "act");
        save(curr, files::curr, "curr");
      });
      return;
    }
    auto cv = c.cavity;
    cv.forcing_enabled = true;
    const auto act = stage("solve_act", [&] { return solver::solve_lid_cavity_2d(cv, "lidcavity2d-act"); });
    cv.forcing_enabled = false;
    const auto curr = stage("solve_curr", [&] { return solver::solve_lid_cavity_2d(cv, "lidcavity2d-curr"); });
    const auto aux = stage("forcing", [&] {
      return solver::forcing_trajectory(act.velocity.grid(), cv.dt, cv.frame_count, "lidcavity2d-forcing");
    });
    stage("write", [&] {
      save(act.velocity, files::act, "act");
      save(curr.velocity, files::curr, "curr");
      save(aux, files::aux, "aux");
    });
  });
}

inline RunRecord cmd_train(const ExperimentConfig& config, const RunOptions& o = {}) {
  return detail::run("train", config, o, [&](ExperimentConfig& c, RunRecord& rec, StageRunner& stage) {
    const auto d = stage("load", [&] { return load_data(c); });
    const auto w = stage("windows", [&] { return make_windows(c, d); });
    const auto data = stage("split", [&] {
      auto b = dataset::split_dataset(w, c.training_frames, c.fractions, c.split_seed);
      dataset::save_split(b, c.path(files::split_dir));
      rec.artifacts["split_map"] = (c.path(files::split_dir) / "split_map.csv").string();
      auto n = dataset::normalize(w, std::move(b));
      dataset::save_norm_stats(n.stats, c.path(files::norm_stats));
      rec.artifacts["norm_stats"] = c.path(files::norm_stats).string();
      return n;
    });
    auto net = stage("init", [&] { return nn::init_network(network_spec(c, w), c.init_seed); });
    nn::TrainConfig tc;
    tc.epochs = c.epochs;
    tc.batch_size = c.batch_size;
    tc.adam = c.adam;
    tc.shuffle_seed = c.shuffle_seed;
    if (o.log)
      tc.on_epoch = [&](std::size_t e, double tl, double vl, double s) {
        *o.log << "epoch " << e << "/" << c.epochs << " train " << tl << " val " << vl << " (" << s << " s)\n";
      };
    nn::AdamState state;
    const auto hist = stage("train", [&] { return nn::train(net, w, data, state, tc); });
    stage("write", [&] {
      nn::CheckpointInfo info;
      info.init_seed = c.init_seed;
      info.shuffle_seed = c.shuffle_seed;
      info.norm_stats = files::norm_stats;
      info.epochs = hist.epochs.size();
      if (!hist.epochs.empty()) {
        info.final_train_loss = hist.epochs.back().train_loss;
        info.final_val_loss = hist.epochs.back().val_loss;
      }
      nn::save_checkpoint(net, info, c.path(files::checkpoint));
      nn::save_history(hist, c.path(files::history));
      rec.artifacts["checkpoint"] = c.path(files::checkpoint).string();
      rec.artifacts["history"] = c.path(files::history).string();
    });
  });
}

/// Per-split comparison, CS-POD over the whole simulation, and the optional
/// horizon/FFT analyses. Inputs are only read.
inline RunRecord cmd_evaluate(const ExperimentConfig& config, const RunOptions& o = {},
                              metrics::MetricReport* out = nullptr) {
  return detail::run("evaluate", config, o, [&](ExperimentConfig& c, RunRecord& rec, StageRunner& stage) {
    const auto d = stage("load", [&] { return load_data(c); });
    const auto w = stage("windows", [&] { return make_windows(c, d); });
    const auto split = stage("split", [&] { return make_split(c, w); });
    const auto f = stage("predict", [&] { return predicted(c, d, w, checkpoint_path(c, o), rec); });
    metrics::MetricReport report;
    stage("splits", [&] {
      const auto a = w.first_frame(), K = c.training_frames, N = w.frame_count();
      auto add = [&](const char* label, const std::vector<std::size_t>& pts, std::size_t first, std::size_t last) {
        if (pts.empty() || first >= last) return;
        auto row = metrics::compare_sets("split", label, metrics::collect(d.curr, pts, first, last),
                                         metrics::collect(f, pts, first, last), metrics::collect(d.act, pts, first, last));
        row.first_frame = first;
        row.last_frame = last;
        report.rows.push_back(row);
      };
      add("train", split.points_in(dataset::Assignment::train), a, K);
      add("validation", split.points_in(dataset::Assignment::validation), a, K);
      add("local_test", split.points_in(dataset::Assignment::local_test), a, K);
      add("future_test", w.eligible_points(), K, N);
    });
    stage("pod", [&] {
      const auto p = pod_compare(c, d, &f, w);
      report.pod_modes_act = p.act.retained();
      report.pod_modes_curr = p.curr.retained();
      report.pod_modes_nn = p.nn->retained();
      report.cs_pod_curr = metrics::cs_pod(p.act, p.curr);
      report.cs_pod_nn = metrics::cs_pod(p.act, *p.nn);
      write_pod_csv(p, c.path(files::pod));
      rec.artifacts["pod"] = c.path(files::pod).string();
    });
    if (c.horizon)
      stage("horizon", [&] {
        const auto rows = horizon_rows(c, d, f, w);
        report.rows.insert(report.rows.end(), rows.begin(), rows.end());
      });
    if (c.fft)
      stage("fft", [&] {
        const auto r = fft_compare(c, d, f, w);
        report.freq_diff_curr = r.curr.mean;
        report.freq_diff_nn = r.nn.mean;
      });
    stage("write", [&] {
      report.write_csv(c.path(files::metrics));
      rec.artifacts["metrics"] = c.path(files::metrics).string();
      if (c.export_field) {
        export_field(f, c.path(files::field));
        rec.artifacts["field"] = c.path(files::field).string();
      }
    });
    if (o.log) *o.log << report.summary();
    if (out) *out = report;
  });
}

/// POD spectra of U_act and U_curr, plus U_nn when a checkpoint is available.
inline RunRecord cmd_pod(const ExperimentConfig& config, const RunOptions& o = {}) {
  return detail::run("pod", config, o, [&](ExperimentConfig& c, RunRecord& rec, StageRunner& stage) {
    const auto d = stage("load", [&] { return load_data(c); });
    const auto w = stage("windows", [&] { return make_windows(c, d); });
    const auto ckpt = checkpoint_path(c, o);
    std::optional<nn::PredictedField> f;
    if (c.self_test || std::filesystem::exists(ckpt))
      f = stage("predict", [&] { return predicted(c, d, w, ckpt, rec); });
    else if (o.checkpoint)
      throw MissingArtifact("checkpoint " + ckpt.string() + " not found");
    stage("pod", [&] {
      write_pod_csv(pod_compare(c, d, f ? &*f : nullptr, w), c.path(files::pod));
      rec.artifacts["pod"] = c.path(files::pod).string();
    });
  });
}

inline RunRecord cmd_horizon(const ExperimentConfig& config, const RunOptions& o = {}) {
  return detail::run("horizon", config, o, [&](ExperimentConfig& c, RunRecord& rec, StageRunner& stage) {
    const auto d = stage("load", [&] { return load_data(c); });
    const auto w = stage("windows", [&] { return make_windows(c, d); });
    const auto f = stage("predict", [&] { return predicted(c, d, w, checkpoint_path(c, o), rec); });
    stage("horizon", [&] {
      write_rows_csv(horizon_rows(c, d, f, w), c.path(files::horizon));
      rec.artifacts["horizon"] = c.path(files::horizon).string();
    });
  });
}

inline RunRecord cmd_fft(const ExperimentConfig& config, const RunOptions& o = {}) {
  return detail::run("fft", config, o, [&](ExperimentConfig& c, RunRecord& rec, StageRunner& stage) {
    const auto d = stage("load", [&] { return load_data(c); });
    const auto w = stage("windows", [&] { return make_windows(c, d); });
    const auto f = stage("predict", [&] { return predicted(c, d, w, checkpoint_path(c, o), rec); });
    stage("fft", [&] {
      write_fft_csv(fft_compare(c, d, f, w), c.path(files::fft));
      rec.artifacts["fft"] = c.path(files::fft).string();
    });
  });
}

}  // namespace gapbridge::cli
