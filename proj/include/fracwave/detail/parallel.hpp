#ifndef FRACWAVE_DETAIL_PARALLEL_HPP
#define FRACWAVE_DETAIL_PARALLEL_HPP

#include <algorithm>
#include <cmath>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fracwave::detail {

// Worker count: explicit request, else FRACWAVE_THREADS, else 1.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FRACWAVE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

// Runs f(i) for i in [0, n). Work items must write to disjoint outputs; the
// result is then independent of the number of workers. The first exception
// thrown by a worker is rethrown on the caller.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
  threads = std::max(1, std::min<int>(threads, int(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// Pairwise (cascade) summation; fixed association order for a given length.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Sample mean and standard error, both via pairwise sums.
inline MeanSe mean_se(const std::vector<double>& x) {
  MeanSe r;
  const std::size_t n = x.size();
  if (n == 0) return r;
  r.mean = pairwise_sum(x) / double(n);
  if (n < 2) return r;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = (x[i] - r.mean) * (x[i] - r.mean);
  r.se = std::sqrt(pairwise_sum(d) / double(n - 1) / double(n));
  return r;
}

} // namespace fracwave::detail

#endif
