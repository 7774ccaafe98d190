#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <vector>

namespace orthodict {

struct IterationRecord {
  std::size_t iteration = 0;  // 0 is the initialization phase
  std::size_t size = 0;       // K blocks (sbo) or n atoms (aksvd)
  double rmse = 0.0;
  double coding_rmse = 0.0;  // right after the (first) coding pass of the iteration
  double learn_seconds = 0.0;
  double represent_seconds = 0.0;
  std::vector<std::size_t> idle_blocks;  // blocks or atoms with no assigned signals
};

struct TrainReport {
  std::string algorithm;
  std::vector<IterationRecord> iterations;
  double init_seconds = 0.0;
  double learn_seconds = 0.0;  // includes init_seconds
  double max_orthonormality_defect = 0.0;
  std::size_t blocks_audited = 0;
  std::vector<std::string> warnings;

  double final_rmse() const { return iterations.empty() ? 0.0 : iterations.back().rmse; }
};

class Stopwatch {
 public:
  Stopwatch() : start_(Clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_;
};

}  // namespace orthodict
