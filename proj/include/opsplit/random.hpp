#pragma once

// Seeded random source shared by every generator.
//
// Engine: std::mt19937_64 seeded with the 64-bit user seed (its output
// sequence is fixed by the C++ standard). Derived variates use explicit
// formulas rather than <random> distributions, whose algorithms vary between
// standard libraries:
//   uniform01  = (next() >> 11) * 2^-53                    in [0, 1)
//   normal     = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)        Box-Muller, two draws
//   index(n)   = floor(uniform01 * n)

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace opsplit {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t index(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// k distinct indices from [0, n) in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + index(n - i)]);
    pool.resize(k);
    return pool;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace opsplit
