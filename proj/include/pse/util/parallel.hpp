#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace pse {

// Index-parallel loop over [0, n). With workers <= 1 this is a plain loop
// (the reproducibility mode); otherwise blocks of indices run on separate
// threads. The body must only write to its own slot.
inline void parallel_for(std::size_t n, std::size_t workers,
                         const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t count = std::min(workers, n);
  std::vector<std::thread> threads;
  threads.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    threads.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += count) body(i);
    });
  }
  for (std::thread& t : threads) t.join();
}

}  // namespace pse
