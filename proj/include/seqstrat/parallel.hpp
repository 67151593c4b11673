#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace seqstrat {

inline unsigned default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, task_count) on up to `jobs` threads. Callers write
// results into preallocated slots indexed by i, so the outcome is identical
// for any job count. The first exception is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t task_count, unsigned jobs, Fn&& fn) {
  if (task_count == 0) return;
  if (jobs == 0) jobs = default_jobs();
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(jobs, task_count));

  if (workers <= 1) {
    for (std::size_t i = 0; i < task_count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= task_count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(task_count); // drain remaining tasks
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

} // namespace seqstrat
