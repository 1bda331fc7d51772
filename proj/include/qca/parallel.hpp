#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace qca {

/// Worker count from QCA_WORKERS, else 1.
unsigned default_workers();

/// Runs body(0..tasks-1) on up to `workers` threads (0 means default_workers()).
/// Tasks write their own result slots; callers reduce in task order, so the
/// result never depends on the worker count.
void parallel_for(std::size_t tasks, unsigned workers, const std::function<void(std::size_t)>& body);

/// Counter-style random stream: the generator for (seed, op, term, batch) is a
/// pure function of those four numbers.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t op, std::uint64_t term, std::uint64_t batch);
  /// Uniform double in [0, 1).
  double uniform();
  std::uint64_t next();

 private:
  std::mt19937_64 engine_;
};

}  // namespace qca
