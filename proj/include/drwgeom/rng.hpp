#pragma once

#include <cmath>
#include <cstdint>

namespace drwgeom {

namespace detail {
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Counter-based generator: output i of stream (seed, stream) is a pure
// function of (seed, stream, i), so identical seeds give identical
// sequences on every platform and streams can be split freely.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(detail::mix64(seed) ^ detail::mix64(detail::mix64(stream) + 0x85ebca6b)) {}

  std::uint64_t next_u64() { return detail::mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  // standard normal via polar Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace drwgeom
