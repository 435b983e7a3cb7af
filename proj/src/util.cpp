#include "mvhedge/util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

namespace mvhedge {

double NormalRng::uniform() {
  // 53-bit mantissa in [0, 1), mapped to (-1, 1).
  const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

double NormalRng::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double v1, v2, s;
  do {
    v1 = uniform();
    v2 = uniform();
    s = v1 * v1 + v2 * v2;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v2 * f;
  has_spare_ = true;
  return v1 * f;
}

namespace {
int g_max_threads = 0;  // 0 = not yet resolved

int hardware_default() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}
}  // namespace

int max_threads() { return g_max_threads > 0 ? g_max_threads : hardware_default(); }

void set_max_threads(int n) { g_max_threads = n > 0 ? n : 0; }

void parallel_blocks(std::size_t n, std::size_t block,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t n_blocks = (n + block - 1) / block;
  const int n_threads = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(max_threads()), n_blocks));
  if (n_threads <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b)
      fn(b * block, std::min(n, (b + 1) * block));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      fn(b * block, std::min(n, (b + 1) * block));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads - 1);
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

void parallel_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
  parallel_blocks(n, 1, [&](std::size_t b, std::size_t) { fn(b); });
}

double block_sum(const double* v, std::size_t n) {
  double total = 0.0;
  for (std::size_t b = 0; b < n; b += kPathBlock) {
    const std::size_t e = std::min(n, b + kPathBlock);
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += v[i];
    total += s;
  }
  return total;
}

double block_mean(const double* v, std::size_t n) {
  return n == 0 ? 0.0 : block_sum(v, n) / static_cast<double>(n);
}

}  // namespace mvhedge
