#include "orthodict/linalg.hpp"

#include <cmath>
#include <sstream>

namespace orthodict {

std::string dims(Index rows, Index cols) {
  std::ostringstream out;
  out << rows << "x" << cols;
  return out.str();
}

bool all_finite(const MatrixView& a) { return a.allFinite(); }

namespace {

template <class Svd>
bool usable(const Svd& svd) {
  return svd.info() == Eigen::Success && svd.matrixU().allFinite() &&
         svd.matrixV().allFinite() && svd.singularValues().allFinite();
}

void canonicalize_signs(SvdResult& r) {
  for (Index k = 0; k < r.u.cols(); ++k) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < r.u.rows(); ++i) {
      const double mag = std::abs(r.u(i, k));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (r.u(arg, k) < 0.0) {
      r.u.col(k) = -r.u.col(k);
      r.v.col(k) = -r.v.col(k);
    }
  }
}

}  // namespace

SvdResult thin_svd(const MatrixView& a) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw ContractError("thin_svd: empty matrix " + dims(a.rows(), a.cols()));
  }
  if (!a.allFinite()) {
    throw ContractError("thin_svd: non-finite entries in " + dims(a.rows(), a.cols()));
  }

  SvdResult r;
  Eigen::BDCSVD<Matrix> bdc(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (usable(bdc)) {
    r.u = bdc.matrixU();
    r.sigma = bdc.singularValues();
    r.v = bdc.matrixV();
  } else {
    Eigen::JacobiSVD<Matrix> jac(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (!usable(jac)) {
      throw DecompositionError("thin_svd: no convergence for " + dims(a.rows(), a.cols()) +
                               " matrix");
    }
    r.u = jac.matrixU();
    r.sigma = jac.singularValues();
    r.v = jac.matrixV();
  }
  canonicalize_signs(r);
  return r;
}

double orthonormality_defect(const MatrixView& a) {
  const Matrix gram = a.transpose() * a;
  return (gram - Matrix::Identity(a.cols(), a.cols())).norm();
}

OrthoBlock::OrthoBlock(Matrix q) : q_(std::move(q)) {
  if (q_.rows() != q_.cols() || q_.rows() < 1) {
    throw ContractError("OrthoBlock: expected a nonempty square matrix, got " +
                        dims(q_.rows(), q_.cols()));
  }
  if (!q_.allFinite()) {
    throw ContractError("OrthoBlock: non-finite entries");
  }
  defect_ = orthonormality_defect(q_);
  if (!(defect_ <= kTolerance)) {
    std::ostringstream msg;
    msg << "OrthoBlock: orthonormality defect " << defect_ << " exceeds " << kTolerance;
    throw ContractError(msg.str());
  }
}

OrthoBlock OrthoBlock::identity(Index p) { return OrthoBlock(Matrix::Identity(p, p)); }

OrthoBlock procrustes_polar(const MatrixView& p) {
  if (p.rows() != p.cols()) {
    throw ContractError("procrustes_polar: square matrix required, got " +
                        dims(p.rows(), p.cols()));
  }
  const SvdResult svd = thin_svd(p);
  return OrthoBlock(svd.u * svd.v.transpose());
}

Matrix SparseColumns::to_dense() const {
  const std::size_t m = cols();
  Matrix x = Matrix::Zero(rows, static_cast<Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    const auto idx = indices(j);
    const auto val = values(j);
    for (std::size_t s = 0; s < per_column; ++s) {
      if (idx[s] != kNoIndex) x(idx[s], static_cast<Index>(j)) = val[s];
    }
  }
  return x;
}

void sparse_residual(const MatrixView& d, const SparseColumns& x, std::size_t j,
                     const VectorView& y, Eigen::Ref<Vector> out) {
  out = y;
  const auto idx = x.indices(j);
  const auto val = x.values(j);
  for (std::size_t s = 0; s < x.per_column; ++s) {
    if (idx[s] != kNoIndex) out.noalias() -= val[s] * d.col(idx[s]);
  }
}

double frobenius_error(const MatrixView& y, const MatrixView& d, const MatrixView& x) {
  if (d.rows() != y.rows() || d.cols() != x.rows() || x.cols() != y.cols()) {
    throw ContractError("frobenius_error: Y " + dims(y.rows(), y.cols()) + ", D " +
                        dims(d.rows(), d.cols()) + ", X " + dims(x.rows(), x.cols()));
  }
  const Matrix e = y - d * x;
  return e.norm();
}

double frobenius_error(const MatrixView& y, const MatrixView& d, const SparseColumns& x) {
  if (d.rows() != y.rows() || d.cols() != x.rows ||
      x.cols() != static_cast<std::size_t>(y.cols())) {
    throw ContractError("frobenius_error: Y " + dims(y.rows(), y.cols()) + ", D " +
                        dims(d.rows(), d.cols()) + ", X " +
                        dims(x.rows, static_cast<Index>(x.cols())));
  }
  Vector r(y.rows());
  double total = 0.0;
  for (Index j = 0; j < y.cols(); ++j) {
    sparse_residual(d, x, static_cast<std::size_t>(j), y.col(j), r);
    total += r.squaredNorm();
  }
  return std::sqrt(total);
}

}  // namespace orthodict
