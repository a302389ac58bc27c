#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "gapbridge/dataset/windows.hpp"
#include "gapbridge/error.hpp"
#include "gapbridge/rng.hpp"
#include "gapbridge/trajectory_io.hpp"

namespace gapbridge::dataset {

enum class Assignment : int { train = 0, validation = 1, local_test = 2 };

inline const char* to_string(Assignment a) {
  switch (a) {
    case Assignment::train: return "train";
    case Assignment::validation: return "validation";
    case Assignment::local_test: return "local_test";
  }
  return "?";
}

inline Assignment assignment_from_string(const std::string& s) {
  if (s == "train") return Assignment::train;
  if (s == "validation") return Assignment::validation;
  if (s == "local_test") return Assignment::local_test;
  throw FormatError("unknown split assignment '" + s + "'");
}

struct Fractions {
  double train = 0.6;
  double validation = 0.1;
  double local_test = 0.3;
};

/// Per-frame point counts: floor for train, nearest for validation, the
/// remainder for local test.
inline std::array<std::size_t, 3> split_counts(std::size_t points, const Fractions& fr) {
  const double p = static_cast<double>(points);
  const auto tr = static_cast<std::size_t>(std::floor(fr.train * p + 1e-9));
  auto va = static_cast<std::size_t>(std::llround(fr.validation * p));
  va = std::min(va, points - tr);
  return {tr, va, points - tr - va};
}

/// Sample ids into a WindowSet. The spatial assignment is shared by every
/// frame of the training range [0, K); frames K..N-1 form the future test.
struct SplitBundle {
  std::vector<std::size_t> train, validation, local_test, future_test;
  std::vector<Assignment> split_map;  // per eligible-point slot
  std::vector<std::size_t> points;    // grid index of each slot
  std::uint64_t seed = 0;
  std::size_t training_frames = 0;  // K
  Fractions fractions;

  std::vector<std::size_t> points_in(Assignment a) const {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < split_map.size(); ++s)
      if (split_map[s] == a) out.push_back(points[s]);
    return out;
  }
};

inline SplitBundle split_dataset(const WindowSet& w, std::size_t training_frames,
                                 Fractions fr = {}, std::uint64_t seed = 0) {
  if (std::abs(fr.train + fr.validation + fr.local_test - 1.0) > 1e-9 || fr.train < 0 ||
      fr.validation < 0 || fr.local_test < 0)
    throw ConfigError("split: fractions must be non-negative and sum to 1");
  if (training_frames > w.frame_count())
    throw ConfigError("split: K=" + std::to_string(training_frames) + " exceeds frame count " +
                      std::to_string(w.frame_count()));
  if (training_frames < w.k())
    throw ConfigError("split: K=" + std::to_string(training_frames) + " < k leaves no training frames");

  const std::size_t P = w.points_per_frame();
  SplitBundle b;
  b.seed = seed;
  b.training_frames = training_frames;
  b.fractions = fr;
  b.points = w.eligible_points();

  std::vector<std::size_t> order(P);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(order));
  const auto counts = split_counts(P, fr);
  b.split_map.assign(P, Assignment::local_test);
  for (std::size_t i = 0; i < P; ++i) {
    if (i < counts[0]) b.split_map[order[i]] = Assignment::train;
    else if (i < counts[0] + counts[1]) b.split_map[order[i]] = Assignment::validation;
  }

  for (std::size_t f = w.first_frame(); f < w.frame_count(); ++f) {
    for (std::size_t s = 0; s < P; ++s) {
      const auto id = w.id(s, f);
      if (f >= training_frames) {
        b.future_test.push_back(id);
        continue;
      }
      switch (b.split_map[s]) {
        case Assignment::train: b.train.push_back(id); break;
        case Assignment::validation: b.validation.push_back(id); break;
        case Assignment::local_test: b.local_test.push_back(id); break;
      }
    }
  }
  return b;
}

/// Writes `<dir>/split.manifest` (seed, K, fractions) and `<dir>/split_map.csv`.
inline void save_split(const SplitBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream m(dir / "split.manifest");
  m << "seed=" << b.seed << '\n'
    << "training_frames=" << b.training_frames << '\n'
    << "fractions=" << io::fmt17(b.fractions.train) << ',' << io::fmt17(b.fractions.validation)
    << ',' << io::fmt17(b.fractions.local_test) << '\n'
    << "map=split_map.csv\n";
  std::ofstream csv(dir / "split_map.csv");
  csv << "point_index,assignment\n";
  for (std::size_t s = 0; s < b.split_map.size(); ++s)
    csv << b.points[s] << ',' << to_string(b.split_map[s]) << '\n';
}

struct StoredSplit {
  std::uint64_t seed = 0;
  std::size_t training_frames = 0;
  Fractions fractions;
  std::vector<std::pair<std::size_t, Assignment>> map;
};

inline StoredSplit load_split(const std::filesystem::path& dir) {
  const auto kv = io::read_manifest(dir / "split.manifest", {"seed", "training_frames", "fractions", "map"});
  StoredSplit s;
  s.seed = std::stoull(io::require(kv, "seed", dir));
  s.training_frames = std::stoull(io::require(kv, "training_frames", dir));
  const auto fr = io::split(io::require(kv, "fractions", dir));
  if (fr.size() != 3) throw FormatError("split.manifest: fractions needs 3 values");
  s.fractions = {std::stod(fr[0]), std::stod(fr[1]), std::stod(fr[2])};
  std::ifstream csv(dir / (kv.count("map") ? kv.at("map") : "split_map.csv"));
  if (!csv) throw MissingArtifact("cannot open split map in " + dir.string());
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    if (io::trim(line).empty()) continue;
    const auto cols = io::split(line);
    if (cols.size() != 2) throw FormatError("split_map.csv: expected 2 columns");
    s.map.emplace_back(std::stoull(cols[0]), assignment_from_string(io::trim(cols[1])));
  }
  return s;
}

}  // namespace gapbridge::dataset
