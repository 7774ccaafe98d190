#pragma once

#include "orthodict/linalg.hpp"
#include "orthodict/onb.hpp"
#include "orthodict/parallel.hpp"
#include "orthodict/report.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace orthodict {

/// How a block is scored for a signal: the sum of squares (residual-optimal,
/// default) or the sum of magnitudes of its s0 largest coefficients.
enum class EnergyKind { squared_sum, abs_sum };

std::string to_string(EnergyKind kind);
EnergyKind parse_energy_kind(const std::string& text);

/// D = [Q_1 ... Q_K], every block p x p.
class UnionDictionary {
 public:
  explicit UnionDictionary(Index p) : p_(p) {}
  UnionDictionary(Index p, std::vector<OrthoBlock> blocks);

  Index p() const noexcept { return p_; }
  std::size_t size() const noexcept { return blocks_.size(); }
  bool empty() const noexcept { return blocks_.empty(); }

  const OrthoBlock& block(std::size_t j) const { return blocks_.at(j); }
  const std::vector<OrthoBlock>& blocks() const noexcept { return blocks_; }

  void append(OrthoBlock block);
  void replace(std::size_t j, OrthoBlock block);

  /// p x (K p) concatenation of the blocks.
  Matrix concatenated() const;

  friend bool operator==(const UnionDictionary&, const UnionDictionary&) = default;

 private:
  Index p_;
  std::vector<OrthoBlock> blocks_;
};

struct Assignment {
  std::uint32_t block = 0;
  double energy = 0.0;
  double residual_sq = 0.0;  // ‖y‖² − Σ kept coefficients²

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Single-block sparse code for every signal: the chosen block per signal plus
/// the thresholded coefficients in that block's basis.
struct Representation {
  std::vector<Assignment> assignments;
  ThresholdedCode code;

  double residual_sq_total() const;
  double rmse(Index p) const;

  friend bool operator==(const Representation&, const Representation&) = default;
};

struct SboConfig {
  std::size_t s0 = 8;
  std::size_t k0 = 5;
  std::size_t p0 = 4096;
  std::size_t rounds = 6;
  std::size_t worst_set = 0;  // 0 selects max(p, m / 16)
  std::size_t k_max = 64;
  double target_error = 0.0;
  EnergyKind energy = EnergyKind::squared_sum;
  std::uint64_t seed = 1;
  std::size_t chunk_size = 256;

  /// Throws ContractError naming the first invalid field.
  void validate() const;
  std::size_t resolved_worst_set(Index p, Index m) const;
};

/// Signals are processed in tiles of this width aligned to absolute signal
/// indices; a work unit covers ceil(chunk_size / kRepresentTile) tiles.
inline constexpr std::size_t kRepresentTile = 64;

double block_energy(const VectorView& y, const OrthoBlock& q, std::size_t s0, EnergyKind kind);

/// Assigns every signal to the block of highest energy (lowest index on ties)
/// and thresholds its coefficients in that block.
Representation represent(const MatrixView& y, const UnionDictionary& d, std::size_t s0,
                         EnergyKind kind, std::size_t chunk_size, const Executor& exec);

/// Indices of the w largest residuals (lowest index on ties), ascending.
std::vector<std::size_t> worst_set(std::span<const Assignment> assignments, std::size_t w);

struct BlockGrouping {
  Matrix signals;                       // columns reordered by block
  std::vector<std::size_t> permutation; // permutation[new position] = original index
  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // [begin, end) per block

  /// Restores the original column order of a matrix laid out like `signals`.
  Matrix unpermute(const MatrixView& grouped) const;
};

/// Stable counting sort of the signal columns by assigned block.
BlockGrouping group_by_block(const MatrixView& y, std::span<const Assignment> assignments,
                             std::size_t blocks);

/// Code for the permuted column order (or its inverse).
ThresholdedCode permute_code(const ThresholdedCode& code, std::span<const std::size_t> order);
ThresholdedCode unpermute_code(const ThresholdedCode& code,
                               std::span<const std::size_t> permutation);

/// K0 blocks, each initialized and trained on its own random sample of P0
/// signals. Samples are drawn without replacement unless P0 > m.
UnionDictionary sbo_init(const MatrixView& y, const SboConfig& cfg, const Executor& exec,
                         std::vector<std::string>* warnings = nullptr);

struct SboResult {
  UnionDictionary dictionary;
  Representation representation;
  TrainReport report;
};

SboResult sbo_train(const MatrixView& y, const SboConfig& cfg, const Executor& exec);

/// ‖Y − D X‖_F for a single-block representation.
double frobenius_error(const MatrixView& y, const UnionDictionary& d,
                       std::span<const Assignment> assignments, const ThresholdedCode& code);

}  // namespace orthodict
