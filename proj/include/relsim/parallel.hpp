#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace relsim {

/// Worker count used when a configuration asks for 0 ("auto").
inline std::size_t default_workers() {
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs fn(task, worker) for every task in [0, tasks) on up to `workers`
/// threads. Tasks are claimed dynamically; callers write results into a slot
/// per task so the reduction order never depends on scheduling. If tasks
/// throw, the exception of the lowest-numbered failing task is rethrown.
template <class Fn>
void parallel_for(std::size_t tasks, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(tasks, 1));
  if (workers == 1) {
    for (std::size_t t = 0; t < tasks; ++t) fn(t, std::size_t{0});
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::size_t error_task = tasks;
  std::exception_ptr error;

  auto body = [&](std::size_t worker) {
    for (;;) {
      if (stop.load(std::memory_order_relaxed)) return;
      const std::size_t t = next.fetch_add(1, std::memory_order_relaxed);
      if (t >= tasks) return;
      try {
        fn(t, worker);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (t < error_task) {
          error_task = t;
          error = std::current_exception();
        }
        stop.store(true, std::memory_order_relaxed);
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body, w);
  body(0);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace relsim
