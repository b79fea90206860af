#include "noisecodec/threads.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace nc {

namespace {

int env_cap() {
  static int cap = [] {
    const char* v = std::getenv("NOISECODEC_THREADS");
    if (!v) return 0;
    int n = std::atoi(v);
    return n > 0 ? n : 1;
  }();
  return cap;
}

thread_local int g_thread_override = 0;

}  // namespace

int math_threads() {
  if (g_thread_override > 0) return g_thread_override;
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  int cap = env_cap();
  if (cap > 0) hw = std::min(hw, cap);
  return hw;
}

ScopedMathThreads::ScopedMathThreads(int n) : saved_(g_thread_override) {
  g_thread_override = n > 0 ? n : 1;
}

ScopedMathThreads::~ScopedMathThreads() { g_thread_override = saved_; }

void parallel_for(int64_t n, const std::function<void(int64_t)>& f) {
  int nt = math_threads();
  if (nt <= 1 || n <= 1) {
    for (int64_t i = 0; i < n; ++i) f(i);
    return;
  }
  nt = static_cast<int>(std::min<int64_t>(nt, n));
  std::vector<std::thread> workers;
  workers.reserve(nt - 1);
  auto run = [&](int t) {
    ScopedSerialMath serial;  // no nested parallelism
    for (int64_t i = t; i < n; i += nt) f(i);
  };
  for (int t = 1; t < nt; ++t) workers.emplace_back(run, t);
  run(0);
  for (auto& w : workers) w.join();
}

}  // namespace nc
