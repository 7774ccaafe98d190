#include "orthodict/onb.hpp"

#include "orthodict/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace orthodict {

namespace {

struct Ranked {
  double magnitude;
  std::uint32_t index;
};

// Maintains the k best entries ordered by decreasing magnitude. Entries arrive
// in increasing index order, so an equal magnitude never displaces a kept one.
template <class Buffer>
std::size_t rank_top(std::span<const double> x, std::size_t k, Buffer& kept) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double mag = std::abs(x[i]);
    if (count == k) {
      if (!(mag > kept[k - 1].magnitude)) continue;
    } else {
      ++count;
    }
    std::size_t pos = count - 1;
    while (pos > 0 && mag > kept[pos - 1].magnitude) {
      kept[pos] = kept[pos - 1];
      --pos;
    }
    kept[pos] = Ranked{mag, static_cast<std::uint32_t>(i)};
  }
  return count;
}

constexpr std::size_t kStackSlots = 64;

template <class Fn>
double with_ranked(std::span<const double> x, std::size_t s0, Fn&& fn) {
  const std::size_t k = std::min(s0, x.size());
  if (k == 0) return 0.0;
  if (k <= kStackSlots) {
    std::array<Ranked, kStackSlots> kept;
    const std::size_t n = rank_top(x, k, kept);
    return fn(std::span<const Ranked>(kept.data(), n));
  }
  std::vector<Ranked> kept(k);
  const std::size_t n = rank_top(x, k, kept);
  return fn(std::span<const Ranked>(kept.data(), n));
}

}  // namespace

std::size_t select_top(std::span<const double> x, std::size_t s0,
                       std::span<std::uint32_t> index_out, std::span<double> value_out) {
  const std::size_t k = std::min(s0, x.size());
  if (index_out.size() < k || value_out.size() < k) {
    throw ContractError("select_top: output spans too small");
  }
  if (k == x.size()) {
    for (std::size_t i = 0; i < k; ++i) {
      index_out[i] = static_cast<std::uint32_t>(i);
      value_out[i] = x[i];
    }
    return k;
  }
  with_ranked(x, k, [&](std::span<const Ranked> kept) {
    for (std::size_t s = 0; s < kept.size(); ++s) index_out[s] = kept[s].index;
    return 0.0;
  });
  std::sort(index_out.begin(), index_out.begin() + static_cast<std::ptrdiff_t>(k));
  for (std::size_t s = 0; s < k; ++s) value_out[s] = x[index_out[s]];
  return k;
}

SelectedEntries select_top(std::span<const double> x, std::size_t s0) {
  if (s0 < 1) throw ContractError("select_top: s0 must be >= 1");
  const std::size_t k = std::min(s0, x.size());
  SelectedEntries out{std::vector<std::uint32_t>(k), std::vector<double>(k)};
  select_top(x, s0, out.index, out.value);
  return out;
}

double top_squared_sum(std::span<const double> x, std::size_t s0) {
  return with_ranked(x, s0, [](std::span<const Ranked> kept) {
    double sum = 0.0;
    for (const auto& r : kept) sum += r.magnitude * r.magnitude;
    return sum;
  });
}

double top_abs_sum(std::span<const double> x, std::size_t s0) {
  return with_ranked(x, s0, [](std::span<const Ranked> kept) {
    double sum = 0.0;
    for (const auto& r : kept) sum += r.magnitude;
    return sum;
  });
}

ThresholdedCode threshold_columns(const MatrixView& coefficients, std::size_t s0) {
  if (s0 < 1) throw ContractError("threshold_columns: s0 must be >= 1");
  const auto p = static_cast<std::size_t>(coefficients.rows());
  const auto t = static_cast<std::size_t>(coefficients.cols());
  ThresholdedCode code(coefficients.rows(), std::min(s0, p), t);
  for (std::size_t j = 0; j < t; ++j) {
    select_top(std::span<const double>(coefficients.col(static_cast<Index>(j)).data(), p), s0,
               code.indices(j), code.values(j));
  }
  return code;
}

Matrix sparse_outer(const MatrixView& y, const ThresholdedCode& x) {
  if (x.cols() != static_cast<std::size_t>(y.cols())) {
    throw ContractError("sparse_outer: Y has " + std::to_string(y.cols()) +
                        " columns, code has " + std::to_string(x.cols()));
  }
  Matrix p = Matrix::Zero(y.rows(), x.rows);
  for (Index j = 0; j < y.cols(); ++j) {
    const auto idx = x.indices(static_cast<std::size_t>(j));
    const auto val = x.values(static_cast<std::size_t>(j));
    for (std::size_t s = 0; s < x.per_column; ++s) {
      if (idx[s] != kNoIndex) p.col(idx[s]).noalias() += val[s] * y.col(j);
    }
  }
  return p;
}

OrthoBlock init_onb(const MatrixView& ysub, std::uint64_t seed) {
  const Index p = ysub.rows();
  if (p < 1) throw ContractError("init_onb: signals must have at least one row");

  Matrix q(p, p);
  Index filled = 0;
  if (ysub.cols() > 0) {
    const SvdResult svd = thin_svd(ysub);
    const double top = svd.sigma.size() > 0 ? svd.sigma(0) : 0.0;
    const double tol = static_cast<double>(std::max(p, ysub.cols())) *
                       std::numeric_limits<double>::epsilon() * top;
    while (filled < svd.sigma.size() && top > 0.0 && svd.sigma(filled) > tol) {
      q.col(filled) = svd.u.col(filled);
      ++filled;
    }
  }

  Rng rng(seed);
  std::normal_distribution<double> gauss;
  while (filled < p) {
    Vector v(p);
    for (Index i = 0; i < p; ++i) v(i) = gauss(rng);
    for (int pass = 0; pass < 2; ++pass) {
      const auto basis = q.leftCols(filled);
      v.noalias() -= basis * (basis.transpose() * v);
    }
    const double norm = v.norm();
    if (norm > 1e-6) {
      q.col(filled) = v / norm;
      ++filled;
    }
  }
  return OrthoBlock(std::move(q));
}

OnbTraining train_onb(const MatrixView& y, const OrthoBlock& q0, std::size_t s0,
                      std::size_t rounds, bool track_errors) {
  if (s0 < 1) throw ContractError("train_onb: s0 must be >= 1");
  if (y.rows() != q0.dim()) {
    throw ContractError("train_onb: block is " + dims(q0.dim(), q0.dim()) + ", signals are " +
                        dims(y.rows(), y.cols()));
  }
  const auto p = static_cast<std::size_t>(y.rows());
  if (y.cols() == 0) {
    return OnbTraining{q0, ThresholdedCode(y.rows(), std::min(s0, p), 0), {}};
  }

  OrthoBlock q = q0;
  Matrix coefficients(y.rows(), y.cols());
  coefficients.noalias() = q.matrix().transpose() * y;
  ThresholdedCode code = threshold_columns(coefficients, s0);

  std::vector<double> errors;
  if (track_errors) errors.push_back(frobenius_error(y, q.matrix(), code));

  for (std::size_t r = 0; r < rounds; ++r) {
    q = procrustes_polar(sparse_outer(y, code));
    coefficients.noalias() = q.matrix().transpose() * y;
    code = threshold_columns(coefficients, s0);
    if (track_errors) errors.push_back(frobenius_error(y, q.matrix(), code));
  }
  return OnbTraining{std::move(q), std::move(code), std::move(errors)};
}

}  // namespace orthodict
