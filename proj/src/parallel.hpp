#pragma once

#include <algorithm>
#include <cstddef>
#include <future>
#include <vector>

namespace surprise::detail {

// Runs fn(i) for i in [0, n) with at most `max_in_flight` concurrent tasks.
// Exceptions propagate from the lowest failing index.
template <class Fn>
void parallel_for(std::size_t n, std::size_t max_in_flight, Fn&& fn) {
  if (max_in_flight <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  for (std::size_t base = 0; base < n; base += max_in_flight) {
    const std::size_t end = std::min(n, base + max_in_flight);
    std::vector<std::future<void>> batch;
    batch.reserve(end - base);
    for (std::size_t i = base; i < end; ++i) {
      batch.push_back(std::async(std::launch::async, [&fn, i] { fn(i); }));
    }
    for (auto& f : batch) f.wait();
    for (auto& f : batch) f.get();
  }
}

}  // namespace surprise::detail
