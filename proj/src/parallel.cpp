#include "qca/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qca {

unsigned default_workers() {
  if (const char* env = std::getenv("QCA_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

void parallel_for(std::size_t tasks, unsigned workers, const std::function<void(std::size_t)>& body) {
  if (workers == 0) workers = default_workers();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, tasks));
  if (workers <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) body(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks; t = next++) {
          try {
            body(t);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = tasks;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

namespace {

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t op, std::uint64_t term, std::uint64_t batch) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(op), hi(op), lo(term), hi(term), lo(batch), hi(batch)};
  return std::mt19937_64(seq);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t op, std::uint64_t term, std::uint64_t batch)
    : engine_(seeded(seed, op, term, batch)) {}

std::uint64_t RandomStream::next() { return engine_(); }

double RandomStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

}  // namespace qca
