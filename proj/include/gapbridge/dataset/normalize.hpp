#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "gapbridge/dataset/split.hpp"
#include "gapbridge/dataset/windows.hpp"
#include "gapbridge/error.hpp"
#include "gapbridge/trajectory_io.hpp"

namespace gapbridge::dataset {

/// Per-feature affine map x' = (x - shift) / scale, shared by all time slices.
struct NormStats {
  std::vector<double> shift;
  std::vector<double> scale;

  std::size_t size() const { return shift.size(); }

  /// Normalizes k consecutive slices in place.
  void apply(std::span<double> slices) const {
    const std::size_t F = size();
    for (std::size_t i = 0; i < slices.size(); ++i) slices[i] = (slices[i] - shift[i % F]) / scale[i % F];
  }
  void invert(std::span<double> slices) const {
    const std::size_t F = size();
    for (std::size_t i = 0; i < slices.size(); ++i) slices[i] = slices[i] * scale[i % F] + shift[i % F];
  }

  static NormStats identity(std::size_t features) {
    return {std::vector<double>(features, 0.0), std::vector<double>(features, 1.0)};
  }
};

/// Training-split statistics over every slice of every training window.
/// Zero-variance features get scale 1.
inline NormStats compute_norm_stats(const WindowSet& w, std::span<const std::size_t> train) {
  if (train.empty()) throw ConfigError("normalize: training split is empty");
  const std::size_t F = w.feature_count(), k = w.k();
  std::vector<double> buf(F * k);
  // Two passes over the data for an accurate variance.
  std::vector<double> sum(F, 0.0);
  for (auto id : train) {
    w.features(id, buf);
    for (std::size_t i = 0; i < buf.size(); ++i) sum[i % F] += buf[i];
  }
  const double count = static_cast<double>(train.size() * k);
  NormStats s{std::vector<double>(F), std::vector<double>(F)};
  for (std::size_t f = 0; f < F; ++f) s.shift[f] = sum[f] / count;
  std::vector<double> sq(F, 0.0);
  for (auto id : train) {
    w.features(id, buf);
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const double d = buf[i] - s.shift[i % F];
      sq[i % F] += d * d;
    }
  }
  for (std::size_t f = 0; f < F; ++f) {
    const double sd = std::sqrt(sq[f] / count);
    s.scale[f] = sd > 1e-12 * std::max(1.0, std::abs(s.shift[f])) ? sd : 1.0;
  }
  return s;
}

/// A split together with the statistics that feed the network.
struct NormalizedBundle {
  SplitBundle split;
  NormStats stats;
};

inline NormalizedBundle normalize(const WindowSet& w, SplitBundle bundle) {
  auto stats = compute_norm_stats(w, bundle.train);
  return {std::move(bundle), std::move(stats)};
}

inline void save_norm_stats(const NormStats& s, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  os << "feature_index,shift,scale\n";
  for (std::size_t f = 0; f < s.size(); ++f)
    os << f << ',' << io::fmt17(s.shift[f]) << ',' << io::fmt17(s.scale[f]) << '\n';
}

inline NormStats load_norm_stats(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifact("cannot open " + path.string());
  NormStats s;
  std::string line;
  std::getline(is, line);
  for (int lineno = 2; std::getline(is, line); ++lineno) {
    if (io::trim(line).empty()) continue;
    const auto cols = io::split(line);
    if (cols.size() != 3 || std::stoull(cols[0]) != s.size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    s.shift.push_back(std::stod(cols[1]));
    s.scale.push_back(std::stod(cols[2]));
    if (!(s.scale.back() > 0.0)) throw FormatError(path.string() + ": scale must be positive");
  }
  return s;
}

}  // namespace gapbridge::dataset
