#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <random>

namespace nc {

// Deterministic random source used everywhere randomness exists.
//
// The generator algorithm is fixed so outputs are stable across builds and
// platforms: MT19937-64 (exactly specified by the C++ standard), uniforms
// formed from the top 53 bits, and normals via the trigonometric Box-Muller
// transform. A generator must not be shared across threads; use fork() to
// derive independent streams.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1).
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_pos() { return ((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal draw; consumes two uniforms per pair of normals.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Derives an independent stream; distinct `stream` values give distinct
  // seeds via splitmix64 mixing of the parent's next output.
  Rng fork(uint64_t stream) {
    uint64_t x = next_u64() + 0x9e3779b97f4a7c15ull * (stream + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return Rng(x);
  }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace nc
