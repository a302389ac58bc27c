#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gapbridge/error.hpp"
#include "gapbridge/nn/network.hpp"
#include "gapbridge/nn/trainer.hpp"
#include "gapbridge/trajectory_io.hpp"

namespace gapbridge::nn {

struct CheckpointInfo {
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;
  std::string norm_stats;  // path of the NormStats CSV, relative to the manifest
  std::size_t epochs = 0;
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
};

struct Checkpoint {
  Network network;
  CheckpointInfo info;
};

namespace detail {

inline std::string dense_widths(const std::vector<DenseSpec>& v) {
  std::vector<std::size_t> w;
  for (auto& d : v) w.push_back(d.width);
  return io::join(w);
}
inline std::string dense_acts(const std::vector<DenseSpec>& v) {
  std::vector<std::string> a;
  for (auto& d : v) a.push_back(to_string(d.activation));
  return io::join(a);
}
inline std::vector<DenseSpec> parse_dense(const std::string& widths, const std::string& acts) {
  std::vector<DenseSpec> out;
  const auto w = io::split(widths), a = io::split(acts);
  if (w.size() != a.size()) throw FormatError("checkpoint: widths and activations differ in length");
  for (std::size_t i = 0; i < w.size(); ++i) out.push_back({std::stoull(w[i]), activation_from_string(a[i])});
  return out;
}

}  // namespace detail

/// Manifest (key=value) plus a little-endian f64 payload holding the
/// parameters in canonical order (stage, layer, gate block F/I/C/O, row-major).
inline void save_checkpoint(const Network& net, const CheckpointInfo& info, const std::filesystem::path& manifest) {
  if (manifest.has_parent_path()) std::filesystem::create_directories(manifest.parent_path());
  const auto& s = net.spec();
  std::ofstream os(manifest);
  if (!os) throw Error("cannot write " + manifest.string());
  os << "format=gapbridge-checkpoint-1\n"
     << "input_features=" << s.input_features << '\n'
     << "sequence_length=" << s.sequence_length << '\n'
     << "stage1=" << detail::dense_widths(s.stage1) << '\n'
     << "stage1_activations=" << detail::dense_acts(s.stage1) << '\n'
     << "stage2=" << io::join(s.stage2) << '\n'
     << "stage3=" << detail::dense_widths(s.stage3) << '\n'
     << "stage3_activations=" << detail::dense_acts(s.stage3) << '\n'
     << "init_seed=" << info.init_seed << '\n'
     << "shuffle_seed=" << info.shuffle_seed << '\n'
     << "norm_stats=" << info.norm_stats << '\n'
     << "epochs=" << info.epochs << '\n'
     << "final_train_loss=" << io::fmt17(info.final_train_loss) << '\n'
     << "final_val_loss=" << io::fmt17(info.final_val_loss) << '\n'
     << "parameter_count=" << net.parameter_count() << '\n'
     << "payload=" << payload_path(manifest).filename().string() << '\n';
  std::ofstream bin(payload_path(manifest), std::ios::binary);
  io::write_f64_le(bin, net.parameters());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& manifest) {
  const auto kv = io::read_manifest(
      manifest, {"format", "input_features", "sequence_length", "stage1", "stage1_activations", "stage2",
                 "stage3", "stage3_activations", "init_seed", "shuffle_seed", "norm_stats", "epochs",
                 "final_train_loss", "final_val_loss", "parameter_count", "payload"});
  auto req = [&](const char* k) { return io::require(kv, k, manifest); };
  if (req("format") != "gapbridge-checkpoint-1") throw FormatError(manifest.string() + ": unknown format");
  NetworkSpec spec;
  spec.input_features = std::stoull(req("input_features"));
  spec.sequence_length = std::stoull(req("sequence_length"));
  spec.stage1 = detail::parse_dense(kv.count("stage1") ? kv.at("stage1") : "",
                                    kv.count("stage1_activations") ? kv.at("stage1_activations") : "");
  for (auto& w : io::split(req("stage2"))) spec.stage2.push_back(std::stoull(w));
  spec.stage3 = detail::parse_dense(req("stage3"), req("stage3_activations"));
  Checkpoint ck{Network(spec), {}};
  ck.info.init_seed = std::stoull(req("init_seed"));
  ck.info.shuffle_seed = std::stoull(req("shuffle_seed"));
  ck.info.norm_stats = kv.count("norm_stats") ? kv.at("norm_stats") : "";
  ck.info.epochs = std::stoull(req("epochs"));
  ck.info.final_train_loss = std::stod(req("final_train_loss"));
  ck.info.final_val_loss = std::stod(req("final_val_loss"));
  const auto values = io::read_f64_le(manifest.parent_path() / req("payload"));
  if (values.size() != ck.network.parameter_count() || std::stoull(req("parameter_count")) != values.size())
    throw FormatError(manifest.string() + ": payload holds " + std::to_string(values.size()) +
                      " parameters, spec needs " + std::to_string(ck.network.parameter_count()));
  std::copy(values.begin(), values.end(), ck.network.parameters().begin());
  if (!ck.network.all_finite()) throw NumericError(manifest.string() + ": non-finite parameter");
  return ck;
}

inline void save_history(const TrainHistory& h, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  os << "epoch,train_loss,val_loss,seconds\n";
  for (auto& e : h.epochs)
    os << e.epoch << ',' << io::fmt17(e.train_loss) << ',' << io::fmt17(e.val_loss) << ',' << e.seconds << '\n';
}

}  // namespace gapbridge::nn
