#pragma once

// Static-partition parallel loop. Chunk boundaries depend only on n and the
// thread count, so per-chunk partial results can be merged deterministically.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace rutfinder::detail {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RUTFINDER_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// fn(chunk, begin, end) for chunk in [0, chunks).
template <class Fn>
void parallel_chunks(std::size_t n, int chunks, Fn&& fn) {
  chunks = std::max(1, std::min<int>(chunks, static_cast<int>(std::max<std::size_t>(n, 1))));
  auto range = [&](int c) {
    return std::pair<std::size_t, std::size_t>{n * c / chunks, n * (c + 1) / chunks};
  };
  if (chunks == 1) {
    fn(0, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(chunks);
  for (int c = 1; c < chunks; ++c) {
    pool.emplace_back([&, c] {
      try {
        const auto [b, e] = range(c);
        fn(c, b, e);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  try {
    const auto [b, e] = range(0);
    fn(0, b, e);
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace rutfinder::detail
