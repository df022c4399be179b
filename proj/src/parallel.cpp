#include "featmap/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace featmap {
namespace {

std::atomic<int> g_threads{0};

int from_environment() {
  if (const char* env = std::getenv("FEATMAP_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int default_threads() {
  int n = g_threads.load();
  if (n <= 0) {
    n = from_environment();
    g_threads.store(n);
  }
  return n;
}

void set_default_threads(int threads) { g_threads.store(threads > 0 ? threads : 0); }

int resolve_threads(int threads) { return threads > 0 ? threads : default_threads(); }

void parallel_for(int n, int threads, const std::function<void(int, int)>& body) {
  if (n <= 0) return;
  int workers = std::min(resolve_threads(threads), n);
  if (workers <= 1 || n < 64) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int begin = w * chunk;
    int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace featmap
