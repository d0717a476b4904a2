#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace seqscm {

// Runs fn(0..count-1) across up to `workers` threads. Tasks must not depend
// on execution order. The first exception thrown by any task is rethrown
// after all threads finish.
inline void parallel_for(std::size_t count, std::size_t workers,
                         const std::function<void(std::size_t)>& fn) {
  if (count == 0) {
    return;
  }
  if (workers <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  workers = std::min(workers, count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::atomic<std::size_t> error_guard{0};
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) {
          return;
        }
        try {
          fn(i);
        } catch (...) {
          if (error_guard.fetch_add(1) == 0) {
            first_error = std::current_exception();
          }
          failed.store(true);
          return;
        }
      }
    });
  }
  for (std::thread& t : threads) {
    t.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

}  // namespace seqscm
