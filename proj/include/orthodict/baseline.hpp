#pragma once

#include "orthodict/linalg.hpp"
#include "orthodict/parallel.hpp"
#include "orthodict/report.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace orthodict {

/// p x n dictionary (n >= p) whose atoms have unit norm within 1e-10.
class OvercompleteDictionary {
 public:
  static constexpr double kNormTolerance = 1e-10;

  explicit OvercompleteDictionary(Matrix atoms);

  const Matrix& atoms() const noexcept { return atoms_; }
  Index p() const noexcept { return atoms_.rows(); }
  Index n() const noexcept { return atoms_.cols(); }

  friend bool operator==(const OvercompleteDictionary&, const OvercompleteDictionary&) = default;

 private:
  Matrix atoms_;
};

struct OmpResult {
  std::vector<std::uint32_t> support;  // in selection order
  std::vector<double> coefficients;    // aligned with support
  bool dependent = false;              // stopped early on a numerically dependent atom
  double residual_norm = 0.0;
};

/// Orthogonal matching pursuit: greedy selection by largest |correlation| with
/// the residual (lowest index on ties), least-squares refit on the support.
/// Stops early once the residual vanishes.
OmpResult omp(const VectorView& y, const OvercompleteDictionary& d, std::size_t s0);

struct BatchOmp {
  SparseColumns codes;  // s0 slots per signal, rows increasing
  std::size_t dependent_signals = 0;
};

BatchOmp batch_omp(const MatrixView& y, const OvercompleteDictionary& d, std::size_t s0,
                   std::size_t chunk_size, const Executor& exec);

struct AksvdConfig {
  std::size_t n = 128;
  std::size_t s0 = 8;
  std::size_t iterations = 100;
  std::uint64_t seed = 1;
  std::size_t chunk_size = 256;

  void validate(Index p) const;
};

struct AksvdResult {
  OvercompleteDictionary dictionary;
  SparseColumns codes;
  TrainReport report;
};

/// Dictionary of n randomly chosen, normalized signals.
OvercompleteDictionary random_signal_dictionary(const MatrixView& y, std::size_t n,
                                                std::uint64_t seed);

/// Approximate K-SVD: batch OMP coding, then every atom refreshed from the same
/// residual snapshot (one rank-1 power step per atom). Unused atoms are replaced
/// by the worst-represented signals.
AksvdResult aksvd_train(const MatrixView& y, const AksvdConfig& cfg, const Executor& exec,
                        const std::optional<OvercompleteDictionary>& initial = std::nullopt);

}  // namespace orthodict
