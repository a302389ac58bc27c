#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gapbridge/error.hpp"
#include "gapbridge/trajectory.hpp"

namespace gapbridge::metrics {

using Complex = std::complex<double>;

namespace detail {

inline bool is_pow2(std::size_t n) { return n && !(n & (n - 1)); }

// In-place iterative radix-2 transform; sign -1 forward, +1 inverse (unscaled).
inline void fft_pow2(std::vector<Complex>& a, int sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / double(len);
    for (std::size_t i = 0; i < n; i += len)
      for (std::size_t k = 0; k < len / 2; ++k) {
        // Twiddles computed directly rather than by recurrence to keep round-off flat.
        const Complex w = std::polar(1.0, ang * double(k));
        const Complex u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
  }
}

}  // namespace detail

/// Full two-sided DFT X_k = sum_j x_j exp(-2 pi i jk / N) for any N.
/// Power-of-two sizes use radix-2 directly, others go through Bluestein's
/// chirp-z identity on a padded radix-2 transform.
inline std::vector<Complex> fft(std::vector<Complex> x) {
  const std::size_t n = x.size();
  if (n <= 1) return x;
  if (detail::is_pow2(n)) {
    detail::fft_pow2(x, -1);
    return x;
  }
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the phase argument small.
    const auto kk = static_cast<double>((k * k) % (2 * n));
    chirp[k] = std::polar(1.0, -std::numbers::pi * kk / double(n));
  }
  std::vector<Complex> a(m), b(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
  detail::fft_pow2(a, -1);
  detail::fft_pow2(b, -1);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  detail::fft_pow2(a, +1);
  for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k] / double(m);
  return x;
}

inline std::vector<Complex> fft(std::span<const double> x) {
  return fft(std::vector<Complex>(x.begin(), x.end()));
}

/// One-sided magnitude spectrum of a real series: floor(N/2)+1 bins at k / (N dt) Hz.
struct Spectrum {
  std::vector<double> frequency;
  std::vector<double> magnitude;
};

inline Spectrum dft_magnitude(std::span<const double> series, double dt) {
  if (series.size() < 2) throw ShapeError("dft: needs at least 2 samples");
  if (!(dt > 0.0)) throw ConfigError("dft: dt must be positive");
  const auto X = fft(series);
  const std::size_t n = series.size(), bins = n / 2 + 1;
  Spectrum s;
  s.frequency.resize(bins);
  s.magnitude.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    s.frequency[k] = double(k) / (double(n) * dt);
    s.magnitude[k] = std::abs(X[k]);
  }
  return s;
}

/// Index of the strongest non-DC bin, or 0 when every non-DC magnitude is below `threshold`.
inline std::size_t dominant_bin(const Spectrum& s, double threshold = 1e-9) {
  std::size_t best = 0;
  double mag = threshold;
  for (std::size_t k = 1; k < s.magnitude.size(); ++k)
    if (s.magnitude[k] > mag) {
      mag = s.magnitude[k];
      best = k;
    }
  return best;
}

/// Which scalar series to analyse at each point.
struct ComponentSelector {
  static constexpr std::size_t magnitude = static_cast<std::size_t>(-1);
  std::size_t component = magnitude;  // a component index, or the vector magnitude
};

/// Anything exposing at(frame, point, component) and a component count.
template <typename Field>
std::vector<double> point_series(const Field& f, std::size_t components, std::size_t point, std::size_t first,
                                 std::size_t last, ComponentSelector sel) {
  std::vector<double> out;
  out.reserve(last - first);
  for (std::size_t t = first; t < last; ++t) {
    if (sel.component == ComponentSelector::magnitude) {
      double s = 0.0;
      for (std::size_t c = 0; c < components; ++c) s += f.at(t, point, c) * f.at(t, point, c);
      out.push_back(std::sqrt(s));
    } else {
      out.push_back(f.at(t, point, sel.component));
    }
  }
  return out;
}

struct FrequencyDiff {
  double mean = 0.0;           // mean |f_A - f_B| / f_B over analysed points
  std::size_t used = 0;
  std::size_t skipped = 0;
};

/// Per point, compares the dominant non-DC frequency of A with that of the
/// reference B over frames [first, last). Points without a peak in either
/// spectrum are skipped.
template <typename FieldA, typename FieldB>
FrequencyDiff freq_percent_diff(const FieldA& a, const FieldB& b, std::size_t components,
                                std::span<const std::size_t> points, std::size_t first, std::size_t last, double dt,
                                ComponentSelector sel = {}) {
  if (last < first + 2) throw ShapeError("freq_percent_diff: range needs at least 2 frames");
  if (sel.component != ComponentSelector::magnitude && sel.component >= components)
    throw ShapeError("freq_percent_diff: component selector out of range");
  FrequencyDiff r;
  double sum = 0.0;
  for (auto p : points) {
    const auto sa = dft_magnitude(point_series(a, components, p, first, last, sel), dt);
    const auto sb = dft_magnitude(point_series(b, components, p, first, last, sel), dt);
    const auto ka = dominant_bin(sa), kb = dominant_bin(sb);
    if (ka == 0 || kb == 0) {
      ++r.skipped;
      continue;
    }
    sum += std::abs(sa.frequency[ka] - sb.frequency[kb]) / sb.frequency[kb];
    ++r.used;
  }
  if (r.used == 0) throw NumericError("freq_percent_diff: no point has a non-DC spectral peak");
  r.mean = sum / double(r.used);
  return r;
}

}  // namespace gapbridge::metrics
