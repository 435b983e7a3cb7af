#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace mvhedge {

[[noreturn]] inline void fail(const std::string& msg) { throw std::invalid_argument(msg); }

inline void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

// SplitMix64 finalizer; spreads consecutive counters over the seed space.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Standard-normal stream with a fixed draw order (polar Box-Muller over
// mt19937_64). One instance per simulated path, seeded from (seed, path),
// so the stream does not depend on how paths are spread over threads.
class NormalRng {
 public:
  explicit NormalRng(std::uint64_t seed) : eng_(seed) {}
  double next();

 private:
  double uniform();  // (-1, 1)
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---- deterministic parallelism ---------------------------------------------
//
// Work is cut into fixed-size index blocks. The block layout (and any
// arithmetic done per block) depends only on the problem size, never on the
// number of worker threads, so results are reproducible bit-for-bit.

inline constexpr std::size_t kPathBlock = 1024;

int max_threads();
void set_max_threads(int n);  // n <= 0 resets to the hardware default

// Runs fn(begin, end) over [0, n) in blocks of `block` indices. fn must only
// write state owned by its own block.
void parallel_blocks(std::size_t n, std::size_t block,
                     const std::function<void(std::size_t, std::size_t)>& fn);

// Convenience: blocked loop with a per-index body.
void parallel_index(std::size_t n, const std::function<void(std::size_t)>& fn);

// Sum of v[0..n) with per-block partials combined in block order: one
// well-defined double for a given n, whatever the thread count.
double block_sum(const double* v, std::size_t n);
double block_mean(const double* v, std::size_t n);

}  // namespace mvhedge
