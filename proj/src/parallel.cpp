#include "skle/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace skle {

unsigned worker_count() {
  if (const char* env = std::getenv("SKLE_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  unsigned w = std::min<std::size_t>(worker_count(), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex m;
  std::size_t fail_index = n;
  std::exception_ptr fail;
  auto run = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (i < fail_index) {
          fail_index = i;
          fail = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> threads;
  for (unsigned t = 0; t < w; ++t) threads.emplace_back(run);
  for (auto& t : threads) t.join();
  if (fail) std::rethrow_exception(fail);
}

}  // namespace skle
