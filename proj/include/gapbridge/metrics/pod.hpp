#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "gapbridge/error.hpp"
#include "gapbridge/trajectory.hpp"

namespace gapbridge::metrics {

/// Truncated POD: orthonormal spatial modes (columns), eigenvalues of
/// K = X X^T / N in non-increasing order, and coefficients with x(t) = Phi c(t).
struct PODBasis {
  Eigen::MatrixXd modes;         // state x kept
  Eigen::VectorXd eigenvalues;   // every non-negligible eigenvalue, not only the kept ones
  Eigen::MatrixXd coefficients;  // kept x frames
  double energy_fraction = 0.0;
  double requested = 0.99;

  std::size_t retained() const { return std::size_t(modes.cols()); }
};

/// Snapshot matrix with one column per frame; multi-component points are
/// stacked point-major (u0, v0, u1, v1, ...).
inline Eigen::MatrixXd snapshot_matrix(const Trajectory& t, std::span<const std::size_t> points = {},
                                       std::size_t first = 0, std::size_t last = 0) {
  if (last == 0) last = t.frame_count();
  std::vector<std::size_t> all;
  if (points.empty()) {
    all.resize(t.grid().point_count());
    for (std::size_t p = 0; p < all.size(); ++p) all[p] = p;
    points = all;
  }
  const std::size_t m = t.components();
  Eigen::MatrixXd X(Eigen::Index(points.size() * m), Eigen::Index(last - first));
  for (std::size_t f = first; f < last; ++f)
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t c = 0; c < m; ++c) X(Eigen::Index(i * m + c), Eigen::Index(f - first)) = t.at(f, points[i], c);
  return X;
}

/// Method of snapshots: eigen-decompose the N x N frame Gram matrix X^T X / N
/// and lift its eigenvectors to spatial modes. Keeps the fewest modes whose
/// cumulative eigenvalue fraction reaches `energy` (E = 1 keeps the full rank).
inline PODBasis pod_decompose(const Eigen::MatrixXd& X, double energy = 0.99) {
  const auto N = X.cols();
  if (N < 2) throw ShapeError("pod: needs at least 2 frames");
  if (!(energy > 0.0 && energy <= 1.0)) throw ConfigError("pod: energy fraction must be in (0, 1]");
  const Eigen::MatrixXd gram = (X.transpose() * X) / double(N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success) throw NumericError("pod: eigen-decomposition failed");
  // Eigen returns ascending order.
  const Eigen::VectorXd lam = es.eigenvalues().reverse();
  const Eigen::MatrixXd vec = es.eigenvectors().rowwise().reverse();
  const double lmax = std::max(lam(0), 0.0);
  if (lmax <= 0.0) throw NumericError("pod: degenerate (all-zero) snapshot matrix");
  const double cutoff = lmax * 1e-13 * double(N);
  Eigen::Index rank = 0;
  double total = 0.0;
  while (rank < N && lam(rank) > cutoff) total += lam(rank++);

  PODBasis b;
  b.requested = energy;
  b.eigenvalues = lam.head(rank);
  Eigen::Index keep = 0;
  double acc = 0.0;
  while (keep < rank) {
    acc += lam(keep++);
    if (acc / total >= energy - 1e-15) break;
  }
  b.energy_fraction = acc / total;
  b.modes.resize(X.rows(), keep);
  for (Eigen::Index i = 0; i < keep; ++i) {
    b.modes.col(i) = X * vec.col(i) / std::sqrt(double(N) * lam(i));
    b.modes.col(i).normalize();
  }
  b.coefficients = b.modes.transpose() * X;
  return b;
}

inline PODBasis pod_decompose(const Trajectory& t, double energy = 0.99) {
  return pod_decompose(snapshot_matrix(t), energy);
}

/// |<phi_A,i, phi_B,i>| for rank-matched modes.
inline std::vector<double> cs_pod(const PODBasis& a, const PODBasis& b) {
  if (a.modes.rows() != b.modes.rows())
    throw ShapeError("cs_pod: bases live on different grids (" + std::to_string(a.modes.rows()) + " vs " +
                     std::to_string(b.modes.rows()) + " state values)");
  const auto n = std::min(a.modes.cols(), b.modes.cols());
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    out[std::size_t(i)] = std::abs(a.modes.col(i).dot(b.modes.col(i))) / (a.modes.col(i).norm() * b.modes.col(i).norm());
  return out;
}

}  // namespace gapbridge::metrics
