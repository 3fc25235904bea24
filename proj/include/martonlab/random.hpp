#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace martonlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Combine a master seed with a stream counter into an independent seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Draws are built from raw mt19937_64 output rather than <random>
// distributions, whose algorithms differ across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  double exponential() { return -std::log(uniform_open()); }

  /// Flat Dirichlet(1) sample of the given dimension.
  std::vector<double> dirichlet(std::size_t dim) {
    std::vector<double> out(dim);
    double total = 0.0;
    for (auto& v : out) {
      v = exponential();
      total += v;
    }
    for (auto& v : out) v /= total;
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace martonlab
