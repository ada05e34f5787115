#pragma once

#include <cstdint>
#include <random>

namespace artik {

// splitmix64: cheap, well-mixed stream derivation. Used to spawn independent
// deterministic substreams from (seed, index...) tuples so parallel and
// sequential execution draw identical numbers.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(seed ^ a) ^ b) ^ c);
}

// mt19937_64 with hand-rolled uniform / gaussian draws so the byte stream
// does not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  double uniform() {  // in [0, 1)
    return (gen_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) {  // in [0, n)
    return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
  }

  // Marsaglia polar method, one value per call (spare cached).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace artik
