#include "orthodict/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace orthodict {

OvercompleteDictionary::OvercompleteDictionary(Matrix atoms) : atoms_(std::move(atoms)) {
  if (atoms_.rows() < 1 || atoms_.cols() < atoms_.rows()) {
    throw ContractError("OvercompleteDictionary: need n >= p >= 1, got " +
                        dims(atoms_.rows(), atoms_.cols()));
  }
  if (!atoms_.allFinite()) throw ContractError("OvercompleteDictionary: non-finite atoms");
  for (Index j = 0; j < atoms_.cols(); ++j) {
    const double norm = atoms_.col(j).norm();
    if (!(std::abs(norm - 1.0) <= kNormTolerance)) {
      std::ostringstream msg;
      msg << "OvercompleteDictionary: atom " << j << " has norm " << norm;
      throw ContractError(msg.str());
    }
  }
}

OmpResult omp(const VectorView& y, const OvercompleteDictionary& d, std::size_t s0) {
  const Matrix& atoms = d.atoms();
  if (y.size() != d.p()) {
    throw ContractError("omp: signal length " + std::to_string(y.size()) +
                        " vs dictionary rows " + std::to_string(d.p()));
  }
  if (s0 < 1) throw ContractError("omp: s0 must be >= 1");

  const Index p = d.p();
  const Index n = d.n();
  const Index steps = static_cast<Index>(std::min<std::size_t>(s0, static_cast<std::size_t>(n)));

  OmpResult out;
  Matrix basis(p, steps);  // orthonormalized selected atoms
  Matrix r_factor = Matrix::Zero(steps, steps);
  Vector qty(steps);
  Vector residual = y;
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);

  const double y_norm = y.norm();
  Vector corr(n);
  Index k = 0;
  for (; k < steps; ++k) {
    if (!(residual.norm() > 1e-12 * y_norm)) break;
    corr.noalias() = atoms.transpose() * residual;

    Index pick = -1;
    double best = -1.0;
    for (Index j = 0; j < n; ++j) {
      if (chosen[static_cast<std::size_t>(j)]) continue;
      const double c = std::abs(corr(j));
      if (c > best) {
        best = c;
        pick = j;
      }
    }

    Vector w = atoms.col(pick);
    Vector h = Vector::Zero(k);
    for (int pass = 0; pass < 2; ++pass) {
      const Vector t = basis.leftCols(k).transpose() * w;
      w.noalias() -= basis.leftCols(k) * t;
      h += t;
    }
    const double nu = w.norm();
    if (!(nu > 1e-10)) {
      out.dependent = true;
      break;
    }
    basis.col(k) = w / nu;
    r_factor.col(k).head(k) = h;
    r_factor(k, k) = nu;
    qty(k) = basis.col(k).dot(y);
    residual = y - basis.leftCols(k + 1) * qty.head(k + 1);

    chosen[static_cast<std::size_t>(pick)] = true;
    out.support.push_back(static_cast<std::uint32_t>(pick));
  }

  const Vector x = r_factor.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(qty.head(k));
  out.coefficients.assign(x.data(), x.data() + k);
  out.residual_norm = residual.norm();
  return out;
}

BatchOmp batch_omp(const MatrixView& y, const OvercompleteDictionary& d, std::size_t s0,
                   std::size_t chunk_size, const Executor& exec) {
  if (chunk_size < 1) throw ContractError("batch_omp: chunk size must be >= 1");
  if (y.rows() != d.p()) {
    throw ContractError("batch_omp: signals are " + dims(y.rows(), y.cols()) +
                        " but dictionary is " + dims(d.p(), d.n()));
  }
  const auto m = static_cast<std::size_t>(y.cols());
  BatchOmp out{SparseColumns(d.n(), s0, m), 0};
  std::vector<char> dependent(m, 0);

  const std::size_t units = (m + chunk_size - 1) / chunk_size;
  exec.for_each(units, [&](std::size_t u) {
    const std::size_t end = std::min(m, (u + 1) * chunk_size);
    std::vector<std::size_t> order;
    for (std::size_t j = u * chunk_size; j < end; ++j) {
      const OmpResult r = omp(y.col(static_cast<Index>(j)), d, s0);
      order.resize(r.support.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return r.support[a] < r.support[b]; });
      auto idx = out.codes.indices(j);
      auto val = out.codes.values(j);
      for (std::size_t s = 0; s < order.size(); ++s) {
        idx[s] = r.support[order[s]];
        val[s] = r.coefficients[order[s]];
      }
      dependent[j] = r.dependent ? 1 : 0;
    }
  });
  out.dependent_signals = static_cast<std::size_t>(std::count(dependent.begin(), dependent.end(), 1));
  return out;
}

void AksvdConfig::validate(Index p) const {
  if (n < static_cast<std::size_t>(p)) {
    throw ContractError("n (" + std::to_string(n) + ") must be >= p (" + std::to_string(p) + ")");
  }
  if (s0 < 1) throw ContractError("s0 must be >= 1");
  if (iterations < 1) throw ContractError("iterations must be >= 1");
  if (chunk_size < 1) throw ContractError("chunk-size must be >= 1");
}

OvercompleteDictionary random_signal_dictionary(const MatrixView& y, std::size_t n,
                                                std::uint64_t seed) {
  const auto m = static_cast<std::size_t>(y.cols());
  Rng rng(derive_seed(seed, seed_stream::kAtoms));
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::shuffle(pool.begin(), pool.end(), rng);

  Matrix atoms(y.rows(), static_cast<Index>(n));
  std::size_t filled = 0;
  for (std::size_t i = 0; i < m && filled < n; ++i) {
    const double norm = y.col(static_cast<Index>(pool[i])).norm();
    if (norm > 0.0) atoms.col(static_cast<Index>(filled++)) = y.col(static_cast<Index>(pool[i])) / norm;
  }
  std::normal_distribution<double> gauss;
  while (filled < n) {
    Vector v(y.rows());
    for (Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
    atoms.col(static_cast<Index>(filled++)) = v / v.norm();
  }
  return OvercompleteDictionary(std::move(atoms));
}

AksvdResult aksvd_train(const MatrixView& y, const AksvdConfig& cfg, const Executor& exec,
                        const std::optional<OvercompleteDictionary>& initial) {
  cfg.validate(y.rows());
  if (y.cols() < 1) throw ContractError("aksvd_train: no signals");
  if (!y.allFinite()) throw ContractError("aksvd_train: signals contain non-finite values");
  if (initial && (initial->p() != y.rows() ||
                  initial->n() != static_cast<Index>(cfg.n))) {
    throw ContractError("aksvd_train: initial dictionary is " +
                        dims(initial->p(), initial->n()) + ", expected " +
                        dims(y.rows(), static_cast<Index>(cfg.n)));
  }

  const auto m = static_cast<std::size_t>(y.cols());
  const auto n = cfg.n;
  TrainReport report;
  report.algorithm = "aksvd";

  Stopwatch init_watch;
  Matrix atoms = initial ? initial->atoms() : random_signal_dictionary(y, n, cfg.seed).atoms();
  report.init_seconds = init_watch.seconds();
  report.learn_seconds = report.init_seconds;

  SparseColumns codes;
  Matrix residual(y.rows(), y.cols());
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    Stopwatch iteration_watch;
    const OvercompleteDictionary dict(atoms);

    Stopwatch coding_watch;
    codes = batch_omp(y, dict, cfg.s0, cfg.chunk_size, exec).codes;
    const double coding_seconds = coding_watch.seconds();

    for (std::size_t j = 0; j < m; ++j) {
      sparse_residual(atoms, codes, j, y.col(static_cast<Index>(j)),
                      residual.col(static_cast<Index>(j)));
    }

    const double coding_rmse = rmse_from_error(residual.norm(), y.rows(), y.cols());

    // Users of each atom as flat slot positions into the code arrays, ordered by signal.
    std::vector<std::vector<std::size_t>> users(n);
    for (std::size_t j = 0; j < m; ++j) {
      const auto idx = codes.indices(j);
      for (std::size_t s = 0; s < codes.per_column; ++s) {
        if (idx[s] != kNoIndex) users[idx[s]].push_back(j * codes.per_column + s);
      }
    }

    Matrix updated = atoms;
    std::vector<double> new_values = codes.value;
    exec.for_each(n, [&](std::size_t a) {
      const auto& slots = users[a];
      if (slots.empty()) return;
      const auto col = static_cast<Index>(a);
      double gg = 0.0;
      Vector v = Vector::Zero(y.rows());
      for (std::size_t slot : slots) {
        const double g = codes.value[slot];
        v.noalias() += g * residual.col(static_cast<Index>(slot / codes.per_column));
        gg += g * g;
      }
      v.noalias() += gg * atoms.col(col);
      const double norm = v.norm();
      if (!(norm > 0.0)) return;
      v /= norm;
      const double overlap = atoms.col(col).dot(v);
      for (std::size_t slot : slots) {
        new_values[slot] =
            residual.col(static_cast<Index>(slot / codes.per_column)).dot(v) +
            codes.value[slot] * overlap;
      }
      updated.col(col) = v;
    });

    IterationRecord record;
    record.iteration = it;
    record.size = n;
    for (std::size_t a = 0; a < n; ++a) {
      if (users[a].empty()) record.idle_blocks.push_back(a);
    }
    if (!record.idle_blocks.empty()) {
      std::vector<std::size_t> order(m);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::vector<double> err(m);
      for (std::size_t j = 0; j < m; ++j) err[j] = residual.col(static_cast<Index>(j)).squaredNorm();
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return err[a] > err[b]; });
      std::size_t next = 0;
      for (std::size_t a : record.idle_blocks) {
        while (next < m && !(y.col(static_cast<Index>(order[next])).norm() > 0.0)) ++next;
        if (next == m) break;
        const auto signal = y.col(static_cast<Index>(order[next++]));
        updated.col(static_cast<Index>(a)) = signal / signal.norm();
      }
    }

    atoms = std::move(updated);
    codes.value = std::move(new_values);

    record.represent_seconds = coding_seconds;
    record.coding_rmse = coding_rmse;
    record.learn_seconds = iteration_watch.seconds();
    record.rmse = rmse_from_error(frobenius_error(y, atoms, codes), y.rows(), y.cols());
    report.learn_seconds += record.learn_seconds;
    report.iterations.push_back(std::move(record));
  }

  return AksvdResult{OvercompleteDictionary(std::move(atoms)), std::move(codes),
                     std::move(report)};
}

}  // namespace orthodict
