#include "orthodict/sbo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

namespace orthodict {

std::string to_string(EnergyKind kind) {
  return kind == EnergyKind::squared_sum ? "squared-sum" : "abs-sum";
}

EnergyKind parse_energy_kind(const std::string& text) {
  if (text == "squared-sum") return EnergyKind::squared_sum;
  if (text == "abs-sum") return EnergyKind::abs_sum;
  throw ContractError("unknown energy kind '" + text + "' (expected squared-sum or abs-sum)");
}

UnionDictionary::UnionDictionary(Index p, std::vector<OrthoBlock> blocks) : p_(p) {
  for (auto& b : blocks) append(std::move(b));
}

void UnionDictionary::append(OrthoBlock block) {
  if (block.dim() != p_) {
    throw ContractError("UnionDictionary: block of size " + dims(block.dim(), block.dim()) +
                        " in a dictionary of dimension " + std::to_string(p_));
  }
  blocks_.push_back(std::move(block));
}

void UnionDictionary::replace(std::size_t j, OrthoBlock block) {
  if (block.dim() != p_) {
    throw ContractError("UnionDictionary: replacement block has the wrong dimension");
  }
  blocks_.at(j) = std::move(block);
}

Matrix UnionDictionary::concatenated() const {
  Matrix d(p_, p_ * static_cast<Index>(blocks_.size()));
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    d.middleCols(static_cast<Index>(j) * p_, p_) = blocks_[j].matrix();
  }
  return d;
}

double Representation::residual_sq_total() const {
  double total = 0.0;
  for (const auto& a : assignments) total += a.residual_sq;
  return total;
}

double Representation::rmse(Index p) const {
  const auto m = static_cast<Index>(assignments.size());
  if (m == 0) return 0.0;
  return std::sqrt(residual_sq_total() / (static_cast<double>(p) * static_cast<double>(m)));
}

void SboConfig::validate() const {
  if (s0 < 1) throw ContractError("s0 must be >= 1");
  if (k0 < 1) throw ContractError("k0 must be >= 1");
  if (p0 < 1) throw ContractError("p0 must be >= 1");
  if (k_max < k0) throw ContractError("kmax must be >= k0");
  if (chunk_size < 1) throw ContractError("chunk-size must be >= 1");
  if (!(target_error >= 0.0)) throw ContractError("target-error must be >= 0");
}

std::size_t SboConfig::resolved_worst_set(Index p, Index m) const {
  if (worst_set > 0) return worst_set;
  return std::max(static_cast<std::size_t>(p), static_cast<std::size_t>(m) / 16);
}

namespace {

double energy_of(std::span<const double> coefficients, std::size_t s0, EnergyKind kind) {
  return kind == EnergyKind::squared_sum ? top_squared_sum(coefficients, s0)
                                         : top_abs_sum(coefficients, s0);
}

Matrix gather_columns(const MatrixView& y, std::span<const std::size_t> columns) {
  Matrix out(y.rows(), static_cast<Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out.col(static_cast<Index>(i)) = y.col(static_cast<Index>(columns[i]));
  }
  return out;
}

void audit(TrainReport& report, const OrthoBlock& block) {
  report.max_orthonormality_defect = std::max(report.max_orthonormality_defect, block.defect());
  ++report.blocks_audited;
}

}  // namespace

double block_energy(const VectorView& y, const OrthoBlock& q, std::size_t s0, EnergyKind kind) {
  if (y.size() != q.dim()) {
    throw ContractError("block_energy: signal length " + std::to_string(y.size()) +
                        " vs block dimension " + std::to_string(q.dim()));
  }
  const Vector c = q.matrix().transpose() * y;
  return energy_of(std::span<const double>(c.data(), static_cast<std::size_t>(c.size())), s0,
                   kind);
}

Representation represent(const MatrixView& y, const UnionDictionary& d, std::size_t s0,
                         EnergyKind kind, std::size_t chunk_size, const Executor& exec) {
  if (d.empty()) throw ContractError("represent: empty dictionary");
  if (y.rows() != d.p()) {
    throw ContractError("represent: signals are " + dims(y.rows(), y.cols()) +
                        " but dictionary blocks are " + dims(d.p(), d.p()));
  }
  if (s0 < 1) throw ContractError("represent: s0 must be >= 1");
  if (chunk_size < 1) throw ContractError("represent: chunk size must be >= 1");

  const Index p = d.p();
  const auto m = static_cast<std::size_t>(y.cols());
  const std::size_t k = d.size();
  const auto width = static_cast<std::size_t>(p);

  Representation rep;
  rep.assignments.resize(m);
  rep.code = ThresholdedCode(p, std::min(s0, width), m);

  const Matrix dt = d.concatenated().transpose();
  const std::size_t tiles = (m + kRepresentTile - 1) / kRepresentTile;
  const std::size_t tiles_per_unit = (chunk_size + kRepresentTile - 1) / kRepresentTile;
  const std::size_t units = (tiles + tiles_per_unit - 1) / tiles_per_unit;

  exec.for_each(units, [&](std::size_t unit) {
    Matrix coefficients(dt.rows(), static_cast<Index>(kRepresentTile));
    const std::size_t tile_end = std::min(tiles, (unit + 1) * tiles_per_unit);
    for (std::size_t tile = unit * tiles_per_unit; tile < tile_end; ++tile) {
      const std::size_t first = tile * kRepresentTile;
      const std::size_t w = std::min(kRepresentTile, m - first);
      auto c = coefficients.leftCols(static_cast<Index>(w));
      c.noalias() = dt * y.middleCols(static_cast<Index>(first), static_cast<Index>(w));

      for (std::size_t jj = 0; jj < w; ++jj) {
        const double* column = c.col(static_cast<Index>(jj)).data();
        auto segment = [&](std::size_t b) {
          return std::span<const double>(column + b * width, width);
        };
        std::size_t best = 0;
        double best_energy = energy_of(segment(0), s0, kind);
        for (std::size_t b = 1; b < k; ++b) {
          const double e = energy_of(segment(b), s0, kind);
          if (e > best_energy) {
            best_energy = e;
            best = b;
          }
        }

        const std::size_t j = first + jj;
        auto idx = rep.code.indices(j);
        auto val = rep.code.values(j);
        select_top(segment(best), s0, idx, val);
        double kept = 0.0;
        for (double v : val) kept += v * v;
        const double norm_sq = y.col(static_cast<Index>(j)).squaredNorm();
        rep.assignments[j] = Assignment{static_cast<std::uint32_t>(best), best_energy,
                                        std::max(0.0, norm_sq - kept)};
      }
    }
  });
  return rep;
}

std::vector<std::size_t> worst_set(std::span<const Assignment> assignments, std::size_t w) {
  if (w < 1) throw ContractError("worst_set: W must be >= 1");
  std::vector<std::size_t> order(assignments.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (w >= order.size()) return order;

  auto worse = [&](std::size_t a, std::size_t b) {
    const double ra = assignments[a].residual_sq;
    const double rb = assignments[b].residual_sq;
    if (ra != rb) return ra > rb;
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(w), order.end(),
                   worse);
  order.resize(w);
  std::sort(order.begin(), order.end());
  return order;
}

BlockGrouping group_by_block(const MatrixView& y, std::span<const Assignment> assignments,
                             std::size_t blocks) {
  if (assignments.size() != static_cast<std::size_t>(y.cols())) {
    throw ContractError("group_by_block: " + std::to_string(assignments.size()) +
                        " assignments for " + std::to_string(y.cols()) + " signals");
  }
  std::vector<std::size_t> counts(blocks, 0);
  for (const auto& a : assignments) {
    if (a.block >= blocks) {
      throw ContractError("group_by_block: block index " + std::to_string(a.block) +
                          " out of range");
    }
    ++counts[a.block];
  }

  BlockGrouping g;
  g.ranges.resize(blocks);
  std::vector<std::size_t> cursor(blocks);
  std::size_t offset = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    g.ranges[b] = {offset, offset + counts[b]};
    cursor[b] = offset;
    offset += counts[b];
  }

  g.permutation.resize(assignments.size());
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    g.permutation[cursor[assignments[i].block]++] = i;
  }
  g.signals = gather_columns(y, g.permutation);
  return g;
}

Matrix BlockGrouping::unpermute(const MatrixView& grouped) const {
  if (static_cast<std::size_t>(grouped.cols()) != permutation.size()) {
    throw ContractError("unpermute: column count does not match the permutation");
  }
  Matrix out(grouped.rows(), grouped.cols());
  for (std::size_t i = 0; i < permutation.size(); ++i) {
    out.col(static_cast<Index>(permutation[i])) = grouped.col(static_cast<Index>(i));
  }
  return out;
}

ThresholdedCode permute_code(const ThresholdedCode& code, std::span<const std::size_t> order) {
  ThresholdedCode out(code.rows, code.per_column, order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::ranges::copy(code.indices(order[i]), out.indices(i).begin());
    std::ranges::copy(code.values(order[i]), out.values(i).begin());
  }
  return out;
}

ThresholdedCode unpermute_code(const ThresholdedCode& code,
                               std::span<const std::size_t> permutation) {
  ThresholdedCode out(code.rows, code.per_column, permutation.size());
  for (std::size_t i = 0; i < permutation.size(); ++i) {
    std::ranges::copy(code.indices(i), out.indices(permutation[i]).begin());
    std::ranges::copy(code.values(i), out.values(permutation[i]).begin());
  }
  return out;
}

UnionDictionary sbo_init(const MatrixView& y, const SboConfig& cfg, const Executor& exec,
                         std::vector<std::string>* warnings) {
  cfg.validate();
  const auto m = static_cast<std::size_t>(y.cols());
  if (m < 1) throw ContractError("sbo_init: no signals");

  const bool with_replacement = cfg.p0 > m;
  if (with_replacement && warnings != nullptr) {
    warnings->push_back("p0 (" + std::to_string(cfg.p0) + ") exceeds the signal count (" +
                        std::to_string(m) + "); initial samples drawn with replacement");
  }

  std::vector<std::optional<OrthoBlock>> blocks(cfg.k0);
  exec.for_each(cfg.k0, [&](std::size_t b) {
    Rng rng(derive_seed(cfg.seed, seed_stream::kInitSample, b));
    std::vector<std::size_t> sample;
    if (with_replacement) {
      std::uniform_int_distribution<std::size_t> pick(0, m - 1);
      sample.resize(cfg.p0);
      for (auto& s : sample) s = pick(rng);
    } else {
      std::vector<std::size_t> pool(m);
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < cfg.p0; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, m - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      sample.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cfg.p0));
    }
    std::sort(sample.begin(), sample.end());

    const Matrix ysub = gather_columns(y, sample);
    const OrthoBlock q0 = init_onb(ysub, derive_seed(cfg.seed, seed_stream::kInitCompletion, b));
    blocks[b] = train_onb(ysub, q0, cfg.s0, cfg.rounds).block;
  });

  UnionDictionary d(y.rows());
  for (auto& b : blocks) d.append(std::move(*b));
  return d;
}

SboResult sbo_train(const MatrixView& y, const SboConfig& cfg, const Executor& exec) {
  cfg.validate();
  if (y.cols() < 1 || y.rows() < 1) {
    throw ContractError("sbo_train: empty signal matrix " + dims(y.rows(), y.cols()));
  }
  if (!y.allFinite()) throw ContractError("sbo_train: signals contain non-finite values");

  const Index p = y.rows();
  const std::size_t w = cfg.resolved_worst_set(p, y.cols());

  TrainReport report;
  report.algorithm = "sbo";

  Stopwatch init_watch;
  UnionDictionary dict = sbo_init(y, cfg, exec, &report.warnings);
  for (const auto& b : dict.blocks()) audit(report, b);

  Stopwatch rep_watch;
  Representation rep = represent(y, dict, cfg.s0, cfg.energy, cfg.chunk_size, exec);
  const double init_rep_seconds = rep_watch.seconds();
  report.init_seconds = init_watch.seconds();
  report.learn_seconds = report.init_seconds;
  double rmse = rep.rmse(p);
  report.iterations.push_back(
      IterationRecord{0, dict.size(), rmse, rmse, report.init_seconds, init_rep_seconds, {}});

  for (std::size_t iteration = 1; rmse > cfg.target_error && dict.size() < cfg.k_max;
       ++iteration) {
    Stopwatch iteration_watch;
    double represent_seconds = 0.0;

    // New block from the worst-represented signals.
    {
      const auto worst = worst_set(rep.assignments, w);
      const Matrix ysub = gather_columns(y, worst);
      const OrthoBlock q0 =
          init_onb(ysub, derive_seed(cfg.seed, seed_stream::kGrowthCompletion, iteration));
      OrthoBlock fresh = train_onb(ysub, q0, cfg.s0, cfg.rounds).block;
      audit(report, fresh);
      dict.append(std::move(fresh));
    }

    Stopwatch first_pass;
    rep = represent(y, dict, cfg.s0, cfg.energy, cfg.chunk_size, exec);
    represent_seconds += first_pass.seconds();
    const double coding_rmse = rep.rmse(p);

    // Retrain every block on the signals it now represents.
    const BlockGrouping groups = group_by_block(y, rep.assignments, dict.size());
    std::vector<std::optional<OrthoBlock>> updated(dict.size());
    exec.for_each(dict.size(), [&](std::size_t b) {
      const auto [begin, end] = groups.ranges[b];
      if (begin == end) return;
      updated[b] = train_onb(groups.signals.middleCols(static_cast<Index>(begin),
                                                       static_cast<Index>(end - begin)),
                             dict.block(b), cfg.s0, cfg.rounds)
                       .block;
    });

    IterationRecord record;
    record.iteration = iteration;
    for (std::size_t b = 0; b < updated.size(); ++b) {
      if (updated[b]) {
        audit(report, *updated[b]);
        dict.replace(b, std::move(*updated[b]));
      } else {
        record.idle_blocks.push_back(b);
      }
    }

    Stopwatch second_pass;
    rep = represent(y, dict, cfg.s0, cfg.energy, cfg.chunk_size, exec);
    represent_seconds += second_pass.seconds();

    rmse = rep.rmse(p);
    record.size = dict.size();
    record.rmse = rmse;
    record.coding_rmse = coding_rmse;
    record.learn_seconds = iteration_watch.seconds();
    record.represent_seconds = represent_seconds;
    report.learn_seconds += record.learn_seconds;
    report.iterations.push_back(std::move(record));
  }

  return SboResult{std::move(dict), std::move(rep), std::move(report)};
}

double frobenius_error(const MatrixView& y, const UnionDictionary& d,
                       std::span<const Assignment> assignments, const ThresholdedCode& code) {
  if (assignments.size() != static_cast<std::size_t>(y.cols()) ||
      code.cols() != assignments.size() || y.rows() != d.p() || code.rows != d.p()) {
    throw ContractError("frobenius_error: union dictionary " + dims(d.p(), d.p()) + " x " +
                        std::to_string(d.size()) + ", Y " + dims(y.rows(), y.cols()) + ", " +
                        std::to_string(assignments.size()) + " assignments, code for " +
                        std::to_string(code.cols()) + " signals");
  }
  Vector r(y.rows());
  double total = 0.0;
  for (Index j = 0; j < y.cols(); ++j) {
    const auto& a = assignments[static_cast<std::size_t>(j)];
    if (a.block >= d.size()) throw ContractError("frobenius_error: block index out of range");
    sparse_residual(d.block(a.block).matrix(), code, static_cast<std::size_t>(j), y.col(j), r);
    total += r.squaredNorm();
  }
  return std::sqrt(total);
}

}  // namespace orthodict
