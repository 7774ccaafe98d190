#pragma once

#include "orthodict/linalg.hpp"
#include "orthodict/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>

namespace orthodict::testing {

inline Matrix gaussian(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) a(i, j) = g(rng);
  }
  return a;
}

// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
// of R's diagonal folded into Q.
inline Matrix random_orthogonal(Index p, std::uint64_t seed) {
  const Matrix a = gaussian(p, p, seed);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(p, p);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

// Columns that are exactly `s` sparse in a random pattern, entries of random
// sign with magnitude in [1, inf).
inline Matrix sparse_coefficients(Index p, Index m, Index s, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  Matrix x = Matrix::Zero(p, m);
  std::vector<Index> rows(static_cast<std::size_t>(p));
  for (Index j = 0; j < m; ++j) {
    std::iota(rows.begin(), rows.end(), Index{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    for (Index k = 0; k < s; ++k) {
      const double v = 1.0 + std::abs(g(rng));
      x(rows[static_cast<std::size_t>(k)], j) = (rng() & 1) ? v : -v;
    }
  }
  return x;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("orthodict_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double relative_gap(double now, double before) {
  return (now - before) / std::max(1.0, std::abs(before));
}

}  // namespace orthodict::testing
