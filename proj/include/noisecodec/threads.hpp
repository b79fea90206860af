#pragma once

#include <cstdint>
#include <functional>

namespace nc {

// Number of worker threads math kernels may use. Resolves to
// min(hardware_concurrency, NOISECODEC_THREADS) and can be lowered per
// thread with ScopedSerialMath (used by parallel evaluation drivers so
// nested kernels stay serial).
int math_threads();

// Pins math kernels on the current thread to exactly n workers while alive.
class ScopedMathThreads {
 public:
  explicit ScopedMathThreads(int n);
  ~ScopedMathThreads();
  ScopedMathThreads(const ScopedMathThreads&) = delete;
  ScopedMathThreads& operator=(const ScopedMathThreads&) = delete;

 private:
  int saved_;
};

// Forces math kernels on the current thread to run serially while alive.
class ScopedSerialMath : public ScopedMathThreads {
 public:
  ScopedSerialMath() : ScopedMathThreads(1) {}
};

// Runs f(i) for i in [0, n). Iterations must write disjoint outputs; the
// result is identical for every thread count.
void parallel_for(int64_t n, const std::function<void(int64_t)>& f);

}  // namespace nc
