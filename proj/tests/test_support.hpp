#pragma once

// Shared fixtures and independent oracles for the unit suites. Nothing here
// goes through the library's transform path.

#include "opsplit/field.hpp"
#include "opsplit/random.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

namespace opsplit::testing {

inline Field random_field(const Grid& g, int channels, std::uint64_t seed) {
  Rng rng(seed);
  Field f(g, channels);
  for (double& v : f.values()) v = rng.normal();
  return f;
}

/// Smooth band-limited 1D or 2D field with modes |m| <= max_mode.
inline Field smooth_field(const Grid& g, int max_mode, std::uint64_t seed, double amplitude = 1.0) {
  Rng rng(seed);
  Field f(g, 1);
  const double base = 2.0 * std::numbers::pi / g.length;
  if (g.dims == 1) {
    for (int m = 1; m <= max_mode; ++m) {
      const double a = amplitude * rng.normal() / m, ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t i = 0; i < g.n; ++i) f[i] += a * std::sin(base * m * g.coordinate(i) + ph);
    }
    return f;
  }
  for (int my = 0; my <= max_mode; ++my)
    for (int mx = -max_mode; mx <= max_mode; ++mx) {
      if (my == 0 && mx <= 0) continue;
      const double a = amplitude * rng.normal() / (mx * mx + my * my);
      const double ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t iy = 0; iy < g.n; ++iy)
        for (std::size_t ix = 0; ix < g.n; ++ix)
          f[iy * g.n + ix] += a * std::cos(base * (mx * g.coordinate(ix) + my * g.coordinate(iy)) + ph);
    }
  return f;
}

/// O(n^2) discrete Fourier transform of a 1D real signal, full spectrum.
inline std::vector<std::complex<double>> direct_dft(std::span<const double> u) {
  const std::size_t n = u.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s{};
    for (std::size_t j = 0; j < n; ++j)
      s += u[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * j % n) / static_cast<double>(n));
    out[k] = s;
  }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_l2(const Field& a, const Field& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

inline Field sample(const Grid& g, const std::function<double(double, double)>& fn) {
  Field f(g, 1);
  if (g.dims == 1) {
    for (std::size_t i = 0; i < g.n; ++i) f[i] = fn(g.coordinate(i), 0.0);
  } else {
    for (std::size_t iy = 0; iy < g.n; ++iy)
      for (std::size_t ix = 0; ix < g.n; ++ix) f[iy * g.n + ix] = fn(g.coordinate(ix), g.coordinate(iy));
  }
  return f;
}

}  // namespace opsplit::testing
