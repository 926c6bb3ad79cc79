#pragma once

// Periodic grids, real fields and their half-spectrum transforms.
//
// Layout conventions (stable; trajectory files and tests depend on them):
//   * Field values are channel-major, then row-major over space. In 2D the
//     row index is y and the column index is x, value(c, iy, ix) sits at
//     c * n * n + iy * n + ix.
//   * Spectrum coefficients use the real-to-complex half layout. In 1D each
//     channel holds n/2 + 1 modes j = 0..n/2. In 2D each channel holds n rows
//     (y wavenumber, full axis, FFT order 0..n/2, -n/2+1..-1) of n/2 + 1
//     columns (x wavenumber, half axis).
//   * forward_transform is unnormalized; inverse_transform divides by the
//     number of grid points, so inverse(forward(f)) == f.
//   * Mode index m on an axis of length L has wavenumber 2*pi*m/L. The Nyquist
//     index n/2 is stored as a real coefficient and carries +pi*n/L; odd
//     derivatives vanish there.

#include "opsplit/detail/fftw_plans.hpp"
#include "opsplit/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace opsplit {

using Complex = std::complex<double>;

struct Grid {
  int dims = 1;
  std::size_t n = 256;  // points per axis
  double length = 16.0;  // domain length per axis

  void validate() const {
    require(dims == 1 || dims == 2, "grid: dims must be 1 or 2");
    require(n >= 2 && n % 2 == 0, "grid: points per axis must be even and >= 2");
    require(std::isfinite(length) && length > 0.0, "grid: domain length must be positive");
  }

  std::size_t points() const { return dims == 1 ? n : n * n; }
  std::size_t modes() const { return dims == 1 ? n / 2 + 1 : n * (n / 2 + 1); }
  double spacing() const { return length / static_cast<double>(n); }
  double coordinate(std::size_t i) const { return spacing() * static_cast<double>(i); }

  Grid with_points(std::size_t m) const { return Grid{dims, m, length}; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

class Field {
public:
  Field() = default;

  Field(Grid grid, int channels) : grid_(grid), channels_(channels) {
    grid_.validate();
    require(channels == 1 || channels == 2, "field: channels must be 1 or 2");
    values_.assign(grid_.points() * static_cast<std::size_t>(channels), 0.0);
  }

  Field(Grid grid, int channels, std::vector<double> values) : Field(grid, channels) {
    require(values.size() == values_.size(), "field: value count does not match grid and channels");
    values_ = std::move(values);
  }

  const Grid& grid() const { return grid_; }
  int channels() const { return channels_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> channel(int c) {
    return std::span<double>(values_).subspan(static_cast<std::size_t>(c) * grid_.points(), grid_.points());
  }
  std::span<const double> channel(int c) const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(c) * grid_.points(),
                                                    grid_.points());
  }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  bool same_shape(const Field& other) const {
    return grid_ == other.grid_ && channels_ == other.channels_;
  }

  Field& operator+=(const Field& o) {
    require(same_shape(o), "field: shape mismatch in +=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    require(same_shape(o), "field: shape mismatch in -=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  Field& operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }

  friend bool operator==(const Field&, const Field&) = default;

private:
  Grid grid_{};
  int channels_ = 1;
  std::vector<double> values_;
};

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

class Spectrum {
public:
  Spectrum() = default;

  Spectrum(Grid grid, int channels) : grid_(grid), channels_(channels) {
    grid_.validate();
    require(channels == 1 || channels == 2, "spectrum: channels must be 1 or 2");
    coeffs_.assign(grid_.modes() * static_cast<std::size_t>(channels), Complex{});
  }

  const Grid& grid() const { return grid_; }
  int channels() const { return channels_; }
  std::size_t size() const { return coeffs_.size(); }

  std::span<Complex> coeffs() { return coeffs_; }
  std::span<const Complex> coeffs() const { return coeffs_; }

  std::span<Complex> channel(int c) {
    return std::span<Complex>(coeffs_).subspan(static_cast<std::size_t>(c) * grid_.modes(), grid_.modes());
  }
  std::span<const Complex> channel(int c) const {
    return std::span<const Complex>(coeffs_).subspan(static_cast<std::size_t>(c) * grid_.modes(),
                                                     grid_.modes());
  }

  Complex& operator[](std::size_t i) { return coeffs_[i]; }
  const Complex& operator[](std::size_t i) const { return coeffs_[i]; }

  Spectrum& operator+=(const Spectrum& o) {
    require(grid_ == o.grid_ && channels_ == o.channels_, "spectrum: shape mismatch in +=");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  Spectrum& operator*=(Complex a) {
    for (auto& v : coeffs_) v *= a;
    return *this;
  }

private:
  Grid grid_{};
  int channels_ = 1;
  std::vector<Complex> coeffs_;
};

namespace detail {

// Transform without the finiteness check; solvers use it internally and test
// their own state for blow-up.
inline Spectrum forward_unchecked(const Field& f) {
  Spectrum s(f.grid(), f.channels());
  for (int c = 0; c < f.channels(); ++c)
    execute_r2c(f.grid().dims, f.grid().n, f.channel(c).data(), s.channel(c).data());
  return s;
}

}  // namespace detail

inline Spectrum forward_transform(const Field& f) {
  require(f.finite(), "forward_transform: field contains non-finite values");
  return detail::forward_unchecked(f);
}

inline Field inverse_transform(const Spectrum& s) {
  require(s.size() == s.grid().modes() * static_cast<std::size_t>(s.channels()),
          "inverse_transform: coefficient count does not match grid layout");
  Field f(s.grid(), s.channels());
  std::vector<Complex> scratch(s.grid().modes());
  const double scale = 1.0 / static_cast<double>(s.grid().points());
  for (int c = 0; c < s.channels(); ++c) {
    auto src = s.channel(c);
    std::copy(src.begin(), src.end(), scratch.begin());
    detail::execute_c2r(s.grid().dims, s.grid().n, scratch.data(), f.channel(c).data());
    for (double& v : f.channel(c)) v *= scale;
  }
  return f;
}

/// Signed FFT index of storage position i on a full axis of n points.
inline long signed_mode(std::size_t i, std::size_t n) {
  return i <= n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
}

/// Wavenumber tables. `kx` covers the half axis (n/2 + 1 entries); `ky` the
/// full axis in FFT order (n entries, empty in 1D).
struct Wavenumbers {
  std::vector<double> kx;
  std::vector<double> ky;
};

inline Wavenumbers wavenumbers(const Grid& g) {
  g.validate();
  const double base = 2.0 * std::numbers::pi / g.length;
  Wavenumbers w;
  w.kx.resize(g.n / 2 + 1);
  for (std::size_t j = 0; j <= g.n / 2; ++j) w.kx[j] = base * static_cast<double>(j);
  if (g.dims == 2) {
    w.ky.resize(g.n);
    for (std::size_t r = 0; r < g.n; ++r) w.ky[r] = base * static_cast<double>(signed_mode(r, g.n));
  }
  return w;
}

/// Visits every stored mode of one channel: f(index, kx, ky, nyquist) where
/// `nyquist` is set when either axis sits at its Nyquist index.
template <class F>
void for_each_mode(const Grid& g, F&& f) {
  const Wavenumbers w = wavenumbers(g);
  const std::size_t half = g.n / 2 + 1;
  if (g.dims == 1) {
    for (std::size_t j = 0; j < half; ++j) f(j, w.kx[j], 0.0, j == g.n / 2);
    return;
  }
  for (std::size_t r = 0; r < g.n; ++r)
    for (std::size_t j = 0; j < half; ++j)
      f(r * half + j, w.kx[j], w.ky[r], j == g.n / 2 || r == g.n / 2);
}

/// Multiplies every channel by m(kx, ky, nyquist).
template <class M>
void apply_multiplier(Spectrum& s, M&& m) {
  std::vector<Complex> table(s.grid().modes());
  for_each_mode(s.grid(), [&](std::size_t i, double kx, double ky, bool nyq) { table[i] = m(kx, ky, nyq); });
  for (int c = 0; c < s.channels(); ++c) {
    auto ch = s.channel(c);
    for (std::size_t i = 0; i < ch.size(); ++i) ch[i] *= table[i];
  }
}

/// Spectral derivative of the given order along axis 0 (x) or 1 (y).
inline Spectrum derivative(Spectrum s, int axis, int order) {
  require(axis == 0 || (axis == 1 && s.grid().dims == 2), "derivative: axis out of range");
  apply_multiplier(s, [&](double kx, double ky, bool nyq) {
    if (nyq && order % 2 == 1) return Complex{};
    const Complex ik{0.0, axis == 0 ? kx : ky};
    Complex r{1.0, 0.0};
    for (int p = 0; p < order; ++p) r *= ik;
    return r;
  });
  return s;
}

/// Sum of |u|^2 over grid points recovered from the half spectrum (Parseval).
inline double spectral_energy(const Spectrum& s) {
  const std::size_t n = s.grid().n;
  const std::size_t half = n / 2 + 1;
  double total = 0.0;
  for (int c = 0; c < s.channels(); ++c) {
    auto ch = s.channel(c);
    for (std::size_t i = 0; i < ch.size(); ++i) {
      const std::size_t j = i % half;
      const double w = (j == 0 || j == n / 2) ? 1.0 : 2.0;
      total += w * std::norm(ch[i]);
    }
  }
  return total / static_cast<double>(s.grid().points());
}

/// Moves a spectrum to a grid with m points per axis (same domain length).
/// Modes strictly below both Nyquist limits are kept, everything else is
/// dropped, and coefficients are rescaled so the represented continuous
/// function is unchanged.
inline Spectrum resize_spectrum(const Spectrum& s, std::size_t m) {
  const Grid& g = s.grid();
  Spectrum out(g.with_points(m), s.channels());
  const std::size_t n = g.n;
  const long keep = static_cast<long>(std::min(n, m) / 2);  // |mode| < keep
  const double scale = std::pow(static_cast<double>(m) / static_cast<double>(n), g.dims);
  const std::size_t half_in = n / 2 + 1;
  const std::size_t half_out = m / 2 + 1;
  for (int c = 0; c < s.channels(); ++c) {
    auto src = s.channel(c);
    auto dst = out.channel(c);
    if (g.dims == 1) {
      for (long j = 0; j < keep; ++j) dst[static_cast<std::size_t>(j)] = scale * src[static_cast<std::size_t>(j)];
      continue;
    }
    for (long ky = -keep + 1; ky < keep; ++ky) {
      const std::size_t rin = ky >= 0 ? static_cast<std::size_t>(ky) : static_cast<std::size_t>(static_cast<long>(n) + ky);
      const std::size_t rout = ky >= 0 ? static_cast<std::size_t>(ky) : static_cast<std::size_t>(static_cast<long>(m) + ky);
      for (long j = 0; j < keep; ++j)
        dst[rout * half_out + static_cast<std::size_t>(j)] = scale * src[rin * half_in + static_cast<std::size_t>(j)];
    }
  }
  return out;
}

/// Spectral truncation (m < n) or zero padding (m > n) of a field.
inline Field resample(const Field& f, std::size_t m) {
  if (m == f.grid().n) return f;
  return inverse_transform(resize_spectrum(forward_transform(f), m));
}

/// Zeroes every mode on a Nyquist row or column.
inline void zero_nyquist(Spectrum& s) {
  for_each_mode(s.grid(), [&](std::size_t i, double, double, bool nyq) {
    if (!nyq) return;
    for (int c = 0; c < s.channels(); ++c) s.channel(c)[i] = Complex{};
  });
}

/// Aliasing-free pointwise product of single-channel spectra (3/2 rule).
/// Each input is padded to 3n/2 points per axis, transformed to physical
/// space, combined with `pointwise(a, b, ...)`, transformed back and
/// truncated to n. Nyquist modes of the result are zeroed.
template <class F, class... Rest>
Spectrum dealiased_product(F&& pointwise, const Spectrum& first, const Rest&... rest) {
  const Grid& g = first.grid();
  require(((rest.grid() == g) && ...), "dealiased_product: inputs live on different grids");
  require(first.channels() == 1 && ((rest.channels() == 1) && ...),
          "dealiased_product: inputs must be single-channel");
  const std::size_t padded = 3 * g.n / 2;
  require(padded % 2 == 0, "dealiased_product: padded size 3n/2 is odd (n must be a multiple of 4)");

  auto to_padded = [&](const Spectrum& s) { return inverse_transform(resize_spectrum(s, padded)); };
  const Field a = to_padded(first);
  const auto others = std::make_tuple(to_padded(rest)...);

  Field product(g.with_points(padded), 1);
  auto out = product.values();
  std::apply(
      [&](const auto&... fs) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = pointwise(a[i], fs[i]...);
      },
      others);

  Spectrum result = resize_spectrum(detail::forward_unchecked(product), g.n);
  zero_nyquist(result);
  return result;
}

}  // namespace opsplit
