#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sbm {

// Runs fn(replica) for replica in [0, n) across `threads` workers in fixed
// contiguous chunks. Callers that write into preallocated per-replica slots
// get results that are independent of the thread count. The first exception
// thrown by any worker is rethrown on the calling thread.
inline void parallel_replicas(long n, int threads,
                              const std::function<void(long)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (long r = 0; r < n; ++r) fn(r);
    return;
  }
  const long workers = std::min<long>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::mutex mu;
  std::exception_ptr first_error;
  for (long w = 0; w < workers; ++w) {
    const long lo = n * w / workers;
    const long hi = n * (w + 1) / workers;
    pool.emplace_back([lo, hi, &fn, &mu, &first_error] {
      try {
        for (long r = lo; r < hi; ++r) fn(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace sbm
