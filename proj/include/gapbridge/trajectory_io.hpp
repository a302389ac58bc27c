#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gapbridge/error.hpp"
#include "gapbridge/trajectory.hpp"

namespace gapbridge {

namespace io {

inline void write_f64_le(std::ostream& os, std::span<const double> values) {
  std::vector<char> buf(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline std::vector<double> read_f64_le(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifact("cannot open payload " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() % 8 != 0)
    throw FormatError(path.string() + ": payload length " + std::to_string(buf.size()) +
                      " bytes is not a multiple of 8");
  std::vector<double> out(buf.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i * 8 + b])) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

inline std::string fmt17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <typename T>
std::string join(const std::vector<T>& v, char sep = ',') {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << sep;
    os << v[i];
  }
  return os.str();
}

inline std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(item);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Reads key=value lines; '#' starts a comment. Line numbers go into errors.
inline std::map<std::string, std::string> read_manifest(
    const std::filesystem::path& path, const std::vector<std::string>& known_keys) {
  std::ifstream is(path);
  if (!is) throw MissingArtifact("cannot open manifest " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  for (int lineno = 1; std::getline(is, line); ++lineno) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path.string() + ": line " + std::to_string(lineno) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    if (std::find(known_keys.begin(), known_keys.end(), key) == known_keys.end())
      throw FormatError(path.string() + ": line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline const std::string& require(const std::map<std::string, std::string>& kv,
                                  const std::string& key, const std::filesystem::path& path) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError(path.string() + ": missing key '" + key + "'");
  return it->second;
}

}  // namespace io

/// Payload file that accompanies a manifest: "run/act.traj" -> "run/act.traj.bin".
inline std::filesystem::path payload_path(const std::filesystem::path& manifest) {
  return manifest.string() + ".bin";
}

/// Writes the text manifest and the little-endian f64 payload
/// (frame-major, then row-major points, then components).
inline void save_trajectory(const Trajectory& t, const std::filesystem::path& manifest) {
  if (manifest.has_parent_path()) std::filesystem::create_directories(manifest.parent_path());
  const auto& g = t.grid();
  std::ofstream os(manifest);
  if (!os) throw Error("cannot write " + manifest.string());
  os << "system=" << t.system() << '\n'
     << "n=" << g.dims << '\n'
     << "m=" << t.components() << '\n'
     << "shape=" << io::join(g.shape) << '\n'
     << "spacing=" << io::join(g.spacing) << '\n'
     << "origin=" << io::join(g.origin) << '\n'
     << "dt=" << io::fmt17(t.dt()) << '\n'
     << "frame_count=" << t.frame_count() << '\n'
     << "components=" << io::join(t.component_names()) << '\n'
     << "payload=" << payload_path(manifest).filename().string() << '\n';
  std::ofstream bin(payload_path(manifest), std::ios::binary);
  if (!bin) throw Error("cannot write " + payload_path(manifest).string());
  io::write_f64_le(bin, t.values());
}

inline Trajectory load_trajectory(const std::filesystem::path& manifest) {
  const auto kv = io::read_manifest(
      manifest, {"system", "n", "m", "shape", "spacing", "origin", "dt", "frame_count",
                 "components", "payload"});
  auto parse_sizes = [&](const std::string& key) {
    std::vector<std::size_t> v;
    for (auto& s : io::split(io::require(kv, key, manifest))) v.push_back(std::stoull(s));
    return v;
  };
  auto parse_doubles = [&](const std::string& key) {
    std::vector<double> v;
    for (auto& s : io::split(io::require(kv, key, manifest))) v.push_back(std::stod(s));
    return v;
  };
  Grid g;
  try {
    g.dims = std::stoull(io::require(kv, "n", manifest));
    g.shape = parse_sizes("shape");
    g.spacing = parse_doubles("spacing");
    g.origin = kv.count("origin") ? parse_doubles("origin") : std::vector<double>(g.dims, 0.0);
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const Error*>(&e)) throw;
    throw FormatError(manifest.string() + ": malformed number (" + e.what() + ")");
  }
  g.validate();
  const std::size_t m = std::stoull(io::require(kv, "m", manifest));
  const double dt = std::stod(io::require(kv, "dt", manifest));
  const std::size_t frames = std::stoull(io::require(kv, "frame_count", manifest));
  std::vector<std::string> names;
  if (kv.count("components")) names = io::split(kv.at("components"));
  if (!names.empty() && names.size() != m)
    throw FormatError(manifest.string() + ": " + std::to_string(names.size()) +
                      " component names for m=" + std::to_string(m));
  const auto bin = kv.count("payload")
                       ? manifest.parent_path() / kv.at("payload")
                       : payload_path(manifest);
  auto values = io::read_f64_le(bin);
  const std::size_t expected = frames * g.point_count() * m;
  if (values.size() != expected)
    throw FormatError(bin.string() + ": size mismatch, expected " + std::to_string(expected) +
                      " values, found " + std::to_string(values.size()));
  Trajectory t(g, dt, m, names, kv.count("system") ? kv.at("system") : "");
  t.assign(std::move(values));
  t.validate();
  return t;
}

/// CSV with columns frame,x[,y],c0,c1,... at 17 significant digits.
inline void export_csv(const Trajectory& t, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  const auto& g = t.grid();
  os << "frame,x" << (g.dims == 2 ? ",y" : "");
  for (const auto& n : t.component_names()) os << ',' << n;
  os << '\n' << std::setprecision(17);
  for (std::size_t f = 0; f < t.frame_count(); ++f)
    for (std::size_t iy = 0; iy < g.ny(); ++iy)
      for (std::size_t ix = 0; ix < g.nx(); ++ix) {
        const auto p = g.index(ix, iy);
        os << f << ',' << g.coord(0, ix);
        if (g.dims == 2) os << ',' << g.coord(1, iy);
        for (std::size_t c = 0; c < t.components(); ++c) os << ',' << t.at(f, p, c);
        os << '\n';
      }
}

/// Reads values back from export_csv output; grid, dt and names come from `layout`.
inline Trajectory import_csv(const std::filesystem::path& path, const Trajectory& layout) {
  std::ifstream is(path);
  if (!is) throw MissingArtifact("cannot open " + path.string());
  const auto& g = layout.grid();
  const std::size_t skip = 1 + g.dims;
  std::string line;
  std::getline(is, line);
  std::vector<double> values;
  for (int lineno = 2; std::getline(is, line); ++lineno) {
    if (io::trim(line).empty()) continue;
    const auto cols = io::split(line);
    if (cols.size() != skip + layout.components())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(skip + layout.components()) + " columns");
    for (std::size_t c = skip; c < cols.size(); ++c) values.push_back(std::stod(cols[c]));
  }
  Trajectory t(g, layout.dt(), layout.components(), layout.component_names(), layout.system());
  t.assign(std::move(values));
  t.validate();
  return t;
}

}  // namespace gapbridge
