#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace orthodict {

// Column-major, so every signal (column) is contiguous in memory.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using MatrixView = Eigen::Ref<const Matrix>;
using VectorView = Eigen::Ref<const Vector>;

/// Raised when an operation's dimensional or configuration contract is violated.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a matrix decomposition fails to converge.
class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SvdResult {
  Matrix u;      // p x r, orthonormal columns
  Vector sigma;  // r values, non-increasing, >= 0
  Matrix v;      // n x r, orthonormal columns
};

/// Thin SVD, r = min(p, n). Each column of U has its largest-magnitude entry
/// made nonnegative (first such entry on ties) with V adjusted to match, so the
/// factors are a deterministic function of the input.
SvdResult thin_svd(const MatrixView& a);

/// ‖AᵀA − I‖_F
double orthonormality_defect(const MatrixView& a);

/// Dense p x p matrix with orthonormal columns. Construction enforces
/// ‖QᵀQ − I‖_F <= kTolerance.
class OrthoBlock {
 public:
  static constexpr double kTolerance = 1e-8;

  explicit OrthoBlock(Matrix q);
  static OrthoBlock identity(Index p);

  const Matrix& matrix() const noexcept { return q_; }
  Index dim() const noexcept { return q_.rows(); }
  double defect() const noexcept { return defect_; }

  friend bool operator==(const OrthoBlock& a, const OrthoBlock& b) {
    return a.q_ == b.q_;
  }

 private:
  Matrix q_;
  double defect_ = 0.0;
};

/// Orthogonal maximizer of trace(QᵀP): Q = U Vᵀ from the SVD of P.
OrthoBlock procrustes_polar(const MatrixView& p);

inline constexpr std::uint32_t kNoIndex = std::numeric_limits<std::uint32_t>::max();

/// Column-wise sparse coefficients with a fixed number of slots per column.
/// Unused slots hold kNoIndex and a zero value. Used slots are listed in
/// increasing row order.
struct SparseColumns {
  Index rows = 0;
  std::size_t per_column = 0;
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  SparseColumns() = default;
  SparseColumns(Index rows, std::size_t per_column, std::size_t cols)
      : rows(rows),
        per_column(per_column),
        index(per_column * cols, kNoIndex),
        value(per_column * cols, 0.0) {}

  std::size_t cols() const noexcept {
    return per_column == 0 ? 0 : index.size() / per_column;
  }
  std::span<std::uint32_t> indices(std::size_t j) {
    return {index.data() + j * per_column, per_column};
  }
  std::span<const std::uint32_t> indices(std::size_t j) const {
    return {index.data() + j * per_column, per_column};
  }
  std::span<double> values(std::size_t j) {
    return {value.data() + j * per_column, per_column};
  }
  std::span<const double> values(std::size_t j) const {
    return {value.data() + j * per_column, per_column};
  }

  Matrix to_dense() const;

  friend bool operator==(const SparseColumns&, const SparseColumns&) = default;
};

/// y_j − D x_j accumulated over the nonzero slots of column j, written to out.
void sparse_residual(const MatrixView& d, const SparseColumns& x, std::size_t j,
                     const VectorView& y, Eigen::Ref<Vector> out);

/// ‖Y − D X‖_F with dense X.
double frobenius_error(const MatrixView& y, const MatrixView& d, const MatrixView& x);

/// ‖Y − D X‖_F with sparse X; X is never materialized.
double frobenius_error(const MatrixView& y, const MatrixView& d, const SparseColumns& x);

/// ‖E‖_F / sqrt(p m), the quality metric reported everywhere.
inline double rmse_from_error(double frobenius, Index p, Index m) {
  return frobenius / std::sqrt(static_cast<double>(p) * static_cast<double>(m));
}

bool all_finite(const MatrixView& a);

std::string dims(Index rows, Index cols);

}  // namespace orthodict
