#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace orthodict {

/// Runs independent work units on a fixed number of threads. Units never
/// share mutable state, so results do not depend on the worker count.
class Executor {
 public:
  explicit Executor(std::size_t workers = 1) : workers_(workers == 0 ? 1 : workers) {}

  std::size_t workers() const noexcept { return workers_; }

  /// Calls body(u) exactly once for every u in [0, units). Rethrows the
  /// exception of the lowest failing unit after all threads have joined.
  void for_each(std::size_t units, const std::function<void(std::size_t)>& body) const;

  static std::size_t hardware_workers();

 private:
  std::size_t workers_;
};

/// splitmix64 finalizer over (seed, stream, index); gives independent,
/// reproducible seeds for each randomized sub-task.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

using Rng = std::mt19937_64;

namespace seed_stream {
inline constexpr std::uint64_t kInitSample = 1;
inline constexpr std::uint64_t kInitCompletion = 2;
inline constexpr std::uint64_t kGrowthCompletion = 3;
inline constexpr std::uint64_t kPatches = 4;
inline constexpr std::uint64_t kAtoms = 5;
}  // namespace seed_stream

}  // namespace orthodict
