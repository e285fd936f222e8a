#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace rhobound {

/// Process-wide worker count used by the batch helpers below. 1 means serial.
inline std::atomic<int>& worker_threads() {
  static std::atomic<int> count{1};
  return count;
}

namespace detail {
inline bool& inside_parallel_region() {
  thread_local bool inside = false;
  return inside;
}
}  // namespace detail

/// Evaluates fn(i) for i in [0, count) and returns the results in index order.
/// The result never depends on the number of workers; the first exception (by index) is rethrown.
/// Calls made from inside a worker run serially.
template <class Fn>
auto parallel_map(std::size_t count, Fn&& fn, int threads = worker_threads().load())
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  const auto work = [&](std::atomic<std::size_t>& next) {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::atomic<std::size_t> next{0};
  const int n = detail::inside_parallel_region() ? 1 : std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (n == 1) {
    work(next);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (int t = 0; t < n; ++t)
      pool.emplace_back([&] {
        detail::inside_parallel_region() = true;
        work(next);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace rhobound
