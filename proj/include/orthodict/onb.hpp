#pragma once

#include "orthodict/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace orthodict {

/// Hard-thresholded coefficients: exactly min(s0, p) (row, value) slots per
/// column, rows strictly increasing.
using ThresholdedCode = SparseColumns;

/// Keeps the s0 largest-magnitude entries of x (lowest index wins ties).
/// Writes min(s0, x.size()) pairs in increasing index order and returns that count.
std::size_t select_top(std::span<const double> x, std::size_t s0,
                       std::span<std::uint32_t> index_out, std::span<double> value_out);

struct SelectedEntries {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
};

SelectedEntries select_top(std::span<const double> x, std::size_t s0);

/// Sum of squares / sum of magnitudes of the s0 largest-magnitude entries.
double top_squared_sum(std::span<const double> x, std::size_t s0);
double top_abs_sum(std::span<const double> x, std::size_t s0);

/// Applies select_top to every column of a coefficient matrix.
ThresholdedCode threshold_columns(const MatrixView& coefficients, std::size_t s0);

/// P = Y Xᵀ with X sparse.
Matrix sparse_outer(const MatrixView& y, const ThresholdedCode& x);

/// Starting basis for a new block: the left singular vectors of ysub. Columns
/// whose singular value is numerically zero (including those missing when
/// ysub has fewer columns than rows) are completed by Gram–Schmidt against
/// Gaussian vectors drawn from `seed`.
OrthoBlock init_onb(const MatrixView& ysub, std::uint64_t seed);

struct OnbTraining {
  OrthoBlock block;
  ThresholdedCode code;
  /// ‖Y − Q_r X_r‖_F for r = 0..R where X_r = select_top(Q_rᵀY); only filled
  /// when requested.
  std::vector<double> round_errors;
};

/// Alternating optimization of a single orthonormal block: threshold coding,
/// then the Procrustes update Q = polar(Y Xᵀ), `rounds` times. The returned
/// code is the thresholding of the final Q's coefficients.
OnbTraining train_onb(const MatrixView& y, const OrthoBlock& q0, std::size_t s0,
                      std::size_t rounds, bool track_errors = false);

}  // namespace orthodict
