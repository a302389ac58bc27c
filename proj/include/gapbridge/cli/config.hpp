#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gapbridge/dataset/split.hpp"
#include "gapbridge/error.hpp"
#include "gapbridge/metrics/spectrum.hpp"
#include "gapbridge/nn/adam.hpp"
#include "gapbridge/nn/network.hpp"
#include "gapbridge/solver/heat1d.hpp"
#include "gapbridge/solver/lid_cavity.hpp"
#include "gapbridge/trajectory_io.hpp"

namespace gapbridge::cli {

enum class SystemId { heat1d, lidcavity2d, external };

inline std::string to_string(SystemId s) {
  switch (s) {
    case SystemId::heat1d: return "heat1d";
    case SystemId::lidcavity2d: return "lidcavity2d";
    case SystemId::external: return "external";
  }
  return "?";
}

struct ExternalSource {
  std::filesystem::path act, curr, aux, mask;
};

/// Declarative experiment description; defaults mirror the reference setups.
struct ExperimentConfig {
  SystemId system = SystemId::heat1d;
  std::filesystem::path output_dir = "run";
  std::string text;  // raw config text, hashed into the run record

  // Systems. The heat pair differs only in diffusivity; the cavity pair in the body force.
  solver::HeatConfig heat;
  double d_act = 15.0;
  double d_curr = 1.0;
  solver::CavityConfig cavity;
  ExternalSource external;

  // Dataset.
  std::size_t k = 3;
  std::size_t training_frames = 150;
  std::size_t use_frames = 0;  // truncate loaded trajectories; 0 keeps all
  dataset::Fractions fractions;
  std::uint64_t split_seed = 0;

  // Network and trainer.
  nn::NetworkSpec network;  // input width filled in from the windows
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  nn::AdamConfig adam;
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;

  // Evaluation.
  double pod_energy = 0.99;
  bool self_test = false;
  bool export_field = false;
  bool horizon = false;
  std::size_t horizon_interval = 250;
  std::size_t horizon_start = 0;  // 0 = first future frame
  std::size_t horizon_end = 0;    // 0 = last frame
  bool fft = false;
  std::size_t fft_first = 0;  // 0 = first future frame
  std::size_t fft_last = 0;   // 0 = last frame
  metrics::ComponentSelector fft_component;

  void override_seed(std::uint64_t seed) {
    split_seed = seed;
    init_seed = seed + 1;
    shuffle_seed = seed + 2;
  }

  std::filesystem::path path(const std::string& name) const { return output_dir / name; }
};

namespace detail {

using boost::property_tree::ptree;

inline std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (auto& item : io::split(s)) {
    const auto t = io::trim(item);
    if (!t.empty()) out.push_back(std::stoull(t));
  }
  return out;
}

inline std::vector<nn::DenseSpec> dense(const std::vector<std::size_t>& w, const std::vector<std::string>& acts,
                                        nn::Activation fallback, bool linear_last) {
  std::vector<nn::DenseSpec> out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    auto a = fallback;
    if (i < acts.size()) a = nn::activation_from_string(io::trim(acts[i]));
    else if (linear_last && i + 1 == w.size()) a = nn::Activation::linear;
    out.push_back({w[i], a});
  }
  return out;
}

template <typename T>
T get(const ptree& pt, const std::string& key, T fallback) {
  const auto raw = pt.get_optional<std::string>(key);
  if (!raw) return fallback;
  try {
    return pt.get<T>(key);
  } catch (const boost::property_tree::ptree_error& e) {
    throw ConfigError("config: bad value for '" + key + "': " + e.what());
  }
}

inline bool get_bool(const ptree& pt, const std::string& key, bool fallback) {
  const auto s = pt.get<std::string>(key, fallback ? "true" : "false");
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config: '" + key + "' must be a boolean, got '" + s + "'");
}

inline void check_keys(const ptree& pt) {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> known = {
      {"experiment", {"system", "output", "seed", "split_seed", "init_seed", "shuffle_seed"}},
      {"heat", {"d_act", "d_curr", "points", "spacing_mm", "dt", "frames", "steps_per_frame", "scheme",
                "ic_amplitude", "ic_center", "ic_sigma", "left", "right"}},
      {"cavity", {"reynolds", "points", "dt", "frames", "moving_lids", "pressure_tolerance", "pressure_max_iters"}},
      {"external", {"act", "curr", "aux", "mask"}},
      {"dataset", {"k", "training_frames", "use_frames", "fractions"}},
      {"network", {"stage1", "stage1_activations", "stage2", "stage3", "stage3_activations"}},
      {"train", {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon"}},
      {"evaluate", {"pod_energy", "self_test", "export_field", "horizon", "horizon_interval", "horizon_start",
                    "horizon_end", "fft", "fft_first", "fft_last", "fft_component"}},
  };
  for (auto& [section, body] : pt) {
    auto it = std::find_if(known.begin(), known.end(), [&](auto& k) { return k.first == section; });
    if (it == known.end()) throw ConfigError("config: unknown section [" + section + "]");
    for (auto& [key, value] : body)
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
  }
}

}  // namespace detail

/// Parses an INI experiment description. Relative paths resolve against `base_dir`.
inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  using detail::get;
  detail::ptree pt;
  try {
    std::istringstream is(text);
    boost::property_tree::ini_parser::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  detail::check_keys(pt);
  ExperimentConfig c;
  c.text = text;

  const auto sys = get<std::string>(pt, "experiment.system", "heat1d");
  if (sys == "heat1d") c.system = SystemId::heat1d;
  else if (sys == "lidcavity2d") c.system = SystemId::lidcavity2d;
  else if (sys == "external") c.system = SystemId::external;
  else throw ConfigError("config: unknown system '" + sys + "'");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path q(p);
    return q.is_absolute() ? q : base_dir / q;
  };
  c.output_dir = resolve(get<std::string>(pt, "experiment.output", "run"));

  if (auto seed = pt.get_optional<std::uint64_t>("experiment.seed")) c.override_seed(*seed);
  else if (!pt.get_optional<std::string>("experiment.split_seed"))
    throw ConfigError("config: [experiment] needs 'seed' (or split_seed/init_seed/shuffle_seed)");
  c.split_seed = get<std::uint64_t>(pt, "experiment.split_seed", c.split_seed);
  c.init_seed = get<std::uint64_t>(pt, "experiment.init_seed", c.init_seed);
  c.shuffle_seed = get<std::uint64_t>(pt, "experiment.shuffle_seed", c.shuffle_seed);

  auto& h = c.heat;
  c.d_act = get(pt, "heat.d_act", c.d_act);
  c.d_curr = get(pt, "heat.d_curr", c.d_curr);
  h.points = get(pt, "heat.points", h.points);
  h.spacing_mm = get(pt, "heat.spacing_mm", h.spacing_mm);
  h.dt = get(pt, "heat.dt", h.dt);
  h.frame_count = get(pt, "heat.frames", h.frame_count);
  h.steps_per_frame = get(pt, "heat.steps_per_frame", h.steps_per_frame);
  const auto scheme = get<std::string>(pt, "heat.scheme", h.scheme == solver::HeatScheme::implicit_euler ? "implicit" : "explicit");
  if (scheme == "implicit") h.scheme = solver::HeatScheme::implicit_euler;
  else if (scheme == "explicit") h.scheme = solver::HeatScheme::explicit_euler;
  else throw ConfigError("config: heat.scheme must be implicit or explicit");
  h.ic_amplitude = get(pt, "heat.ic_amplitude", h.ic_amplitude);
  h.ic_center_fraction = get(pt, "heat.ic_center", h.ic_center_fraction);
  h.ic_sigma_fraction = get(pt, "heat.ic_sigma", h.ic_sigma_fraction);
  h.left = get(pt, "heat.left", h.left);
  h.right = get(pt, "heat.right", h.right);

  auto& cv = c.cavity;
  cv.reynolds = get(pt, "cavity.reynolds", cv.reynolds);
  cv.points = get(pt, "cavity.points", cv.points);
  cv.dt = get(pt, "cavity.dt", cv.dt);
  cv.frame_count = get(pt, "cavity.frames", cv.frame_count);
  cv.moving_lids_enabled = detail::get_bool(pt, "cavity.moving_lids", cv.moving_lids_enabled);
  cv.pressure_tolerance = get(pt, "cavity.pressure_tolerance", cv.pressure_tolerance);
  cv.pressure_max_iters = get(pt, "cavity.pressure_max_iters", cv.pressure_max_iters);

  if (auto p = pt.get_optional<std::string>("external.act")) c.external.act = resolve(*p);
  if (auto p = pt.get_optional<std::string>("external.curr")) c.external.curr = resolve(*p);
  if (auto p = pt.get_optional<std::string>("external.aux")) c.external.aux = resolve(*p);
  if (auto p = pt.get_optional<std::string>("external.mask")) c.external.mask = resolve(*p);

  const std::size_t default_k = c.system == SystemId::lidcavity2d ? 1000 : c.system == SystemId::heat1d ? 150 : 0;
  c.k = get(pt, "dataset.k", c.k);
  c.training_frames = get(pt, "dataset.training_frames", default_k);
  if (c.training_frames == 0) throw ConfigError("config: dataset.training_frames is required");
  c.use_frames = get(pt, "dataset.use_frames", c.use_frames);
  if (auto fr = pt.get_optional<std::string>("dataset.fractions")) {
    const auto v = io::split(*fr);
    if (v.size() != 3) throw ConfigError("config: dataset.fractions needs three values");
    c.fractions = {std::stod(v[0]), std::stod(v[1]), std::stod(v[2])};
  }

  // Network: System 1 style (one TDDL layer) for heat, two TDDL layers otherwise.
  c.network = c.system == SystemId::heat1d ? nn::NetworkSpec::one_tddl(1, c.k, 1) : nn::NetworkSpec::two_tddl(1, c.k, 2);
  c.network.sequence_length = c.k;
  if (auto s = pt.get_optional<std::string>("network.stage1"))
    c.network.stage1 = detail::dense(detail::parse_sizes(*s), io::split(pt.get<std::string>("network.stage1_activations", "")),
                                     nn::Activation::relu, false);
  if (auto s = pt.get_optional<std::string>("network.stage2")) c.network.stage2 = detail::parse_sizes(*s);
  if (auto s = pt.get_optional<std::string>("network.stage3"))
    c.network.stage3 = detail::dense(detail::parse_sizes(*s), io::split(pt.get<std::string>("network.stage3_activations", "")),
                                     nn::Activation::relu, true);

  c.epochs = get(pt, "train.epochs", c.epochs);
  c.batch_size = get(pt, "train.batch_size", c.batch_size);
  c.adam.learning_rate = get(pt, "train.learning_rate", c.adam.learning_rate);
  c.adam.beta1 = get(pt, "train.beta1", c.adam.beta1);
  c.adam.beta2 = get(pt, "train.beta2", c.adam.beta2);
  c.adam.epsilon = get(pt, "train.epsilon", c.adam.epsilon);

  c.pod_energy = get(pt, "evaluate.pod_energy", c.pod_energy);
  c.self_test = detail::get_bool(pt, "evaluate.self_test", c.self_test);
  c.export_field = detail::get_bool(pt, "evaluate.export_field", c.export_field);
  c.horizon = detail::get_bool(pt, "evaluate.horizon", c.horizon);
  c.horizon_interval = get(pt, "evaluate.horizon_interval", c.horizon_interval);
  c.horizon_start = get(pt, "evaluate.horizon_start", c.horizon_start);
  c.horizon_end = get(pt, "evaluate.horizon_end", c.horizon_end);
  c.fft = detail::get_bool(pt, "evaluate.fft", c.fft);
  c.fft_first = get(pt, "evaluate.fft_first", c.fft_first);
  c.fft_last = get(pt, "evaluate.fft_last", c.fft_last);
  const auto comp = get<std::string>(pt, "evaluate.fft_component", "magnitude");
  if (comp != "magnitude") c.fft_component.component = std::stoull(comp);

  if (c.system == SystemId::external && (c.external.act.empty() || c.external.curr.empty()))
    throw ConfigError("config: external system needs [external] act and curr");
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace gapbridge::cli
