#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace bsel {

// Runs fn(i) for i in [0, n). Each task owns its output slot, so results are
// identical for any thread count.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nworkers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(nworkers);
  for (std::size_t w = 0; w < nworkers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += nworkers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace bsel
