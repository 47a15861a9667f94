#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rieszlab {

/// Process-wide worker cap (0 restores the hardware default).
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs f(i) for i in [0, n). Each index is processed exactly once and writes
/// only to its own slot, so results never depend on the thread count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(max_threads(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex m;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace rieszlab
