#pragma once

// Initial conditions and benchmark trajectory generation.
//
// Benchmark presets (desk scale; 1D matches the reference resolution):
//   advdiff      1D, 256 points, l = 16, T = 10, 100 frames, analytic
//   combined     1D, 256 points, l = 16, T = 4,  250 frames
//   grayscott    2D, 64 x 64 on [0, 2)^2, T = 50, 50 frames
//   navier_stokes, euler, diffusion_2d
//                2D, 64 x 64 on [0, 2pi)^2, T = 4, 50 frames
//
// All generators draw from Rng(seed) in a fixed order, so (spec, seed)
// determines the output bit for bit.

#include "opsplit/error.hpp"
#include "opsplit/field.hpp"
#include "opsplit/physics.hpp"
#include "opsplit/random.hpp"
#include "opsplit/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace opsplit {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// sum_k a_k k^-power sin(k theta + phi_k), theta = 2 pi x / l, normalized to
/// zero mean and unit variance. a_k ~ N(0, 1), phi_k ~ U[0, 2pi).
inline Field init_fractaloid(const Grid& g, int degree, double power, std::uint64_t seed) {
  require(g.dims == 1, "init_fractaloid: 1D grid required");
  require(degree >= 1, "init_fractaloid: degree must be >= 1");
  require(static_cast<std::size_t>(degree) <= g.n / 2, "init_fractaloid: degree exceeds the Nyquist mode");
  Rng rng(seed);
  Field u(g, 1);
  for (int k = 1; k <= degree; ++k) {
    const double a = rng.normal() * std::pow(static_cast<double>(k), -power);
    const double phi = rng.uniform(0.0, kTwoPi);
    for (std::size_t i = 0; i < g.n; ++i)
      u[i] += a * std::sin(k * kTwoPi * g.coordinate(i) / g.length + phi);
  }
  const double m = mean(u.values());
  for (double& v : u.values()) v -= m;
  const double sd = std::sqrt(variance(u.values()));
  require(sd > 0.0, "init_fractaloid: degenerate field");
  for (double& v : u.values()) v /= sd;
  return u;
}

/// sum_j A_j sin(2 pi l_j x / l + phi_j), A_j ~ U[-0.5, 0.5], l_j ~ U{1..5},
/// phi_j ~ U[0, 2pi).
inline Field init_fourier_mix(const Grid& g, int J, std::uint64_t seed) {
  require(g.dims == 1, "init_fourier_mix: 1D grid required");
  require(J >= 1, "init_fourier_mix: J must be >= 1");
  Rng rng(seed);
  Field u(g, 1);
  for (int j = 0; j < J; ++j) {
    const double A = rng.uniform(-0.5, 0.5);
    const double ell = static_cast<double>(1 + rng.index(5));
    const double phi = rng.uniform(0.0, kTwoPi);
    for (std::size_t i = 0; i < g.n; ++i) u[i] += A * std::sin(kTwoPi * ell * g.coordinate(i) / g.length + phi);
  }
  return u;
}

/// Two channels (A, B) with B a sum of Gaussian bumps grouped around
/// `n_clusters` centres (clipped to 1) and A = 1 - B.
///
/// Per cluster: centre ~ U[0, l)^2, 1..4 bumps offset by N(0, (0.05 l)^2) per
/// axis, widths ~ U[0.02 l, 0.06 l]. Distances are periodic.
inline Field init_clustered_gaussians(const Grid& g, int n_clusters, std::uint64_t seed) {
  require(g.dims == 2, "init_clustered_gaussians: 2D grid required");
  require(n_clusters >= 0, "init_clustered_gaussians: cluster count must be >= 0");
  Rng rng(seed);
  const double l = g.length;
  struct Bump {
    double x, y, w;
  };
  std::vector<Bump> bumps;
  for (int c = 0; c < n_clusters; ++c) {
    const double cx = rng.uniform(0.0, l), cy = rng.uniform(0.0, l);
    const std::size_t count = 1 + rng.index(4);
    for (std::size_t b = 0; b < count; ++b) {
      const double x = cx + 0.05 * l * rng.normal(), y = cy + 0.05 * l * rng.normal();
      bumps.push_back({x, y, rng.uniform(0.02 * l, 0.06 * l)});
    }
  }
  auto wrap = [l](double d) {
    d = std::fmod(d, l);
    if (d < 0) d += l;
    return std::min(d, l - d);
  };
  Field u(g, 2);
  auto A = u.channel(0);
  auto B = u.channel(1);
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      double b = 0.0;
      for (const auto& bp : bumps) {
        const double dx = wrap(g.coordinate(ix) - bp.x), dy = wrap(g.coordinate(iy) - bp.y);
        b += std::exp(-(dx * dx + dy * dy) / (2.0 * bp.w * bp.w));
      }
      b = std::min(b, 1.0);
      B[iy * g.n + ix] = b;
      A[iy * g.n + ix] = 1.0 - b;
    }
  return u;
}

/// sum_{n,m=1..N_m} a_nm sin(2 pi n x / L + phi_nm) sin(2 pi m y / L + psi_nm)
/// with a_nm ~ N(0, 10 / (n + m)) and uniform phases.
inline Field init_lowfreq_modes_2d(const Grid& g, int n_modes, std::uint64_t seed) {
  require(g.dims == 2, "init_lowfreq_modes_2d: 2D grid required");
  require(n_modes >= 1, "init_lowfreq_modes_2d: N_m must be >= 1");
  require(static_cast<std::size_t>(n_modes) < g.n / 2, "init_lowfreq_modes_2d: N_m must be below the Nyquist mode");
  Rng rng(seed);
  Field w(g, 1);
  std::vector<double> sx(g.n), sy(g.n);
  for (int n = 1; n <= n_modes; ++n)
    for (int m = 1; m <= n_modes; ++m) {
      const double a = std::sqrt(10.0 / (n + m)) * rng.normal();
      const double phi = rng.uniform(0.0, kTwoPi), psi = rng.uniform(0.0, kTwoPi);
      for (std::size_t i = 0; i < g.n; ++i) {
        sx[i] = std::sin(kTwoPi * n * g.coordinate(i) / g.length + phi);
        sy[i] = std::sin(kTwoPi * m * g.coordinate(i) / g.length + psi);
      }
      for (std::size_t iy = 0; iy < g.n; ++iy)
        for (std::size_t ix = 0; ix < g.n; ++ix) w[iy * g.n + ix] += a * sx[ix] * sy[iy];
    }
  return w;
}

// Gray-Scott constants used whenever a trajectory does not set them.
inline constexpr double kGrayScottDA = 2e-5;
inline constexpr double kGrayScottDB = 1e-5;
inline constexpr double kGrayScottDelta = 1.0;

/// Evolves a Gray-Scott state for a duration ~ U[0, max_duration] drawn from
/// `seed`, with D_A = 2e-5, D_B = 1e-5, delta = 1 and the given F, k.
inline Field warm_start_grayscott(const Field& u, double F, double k, double max_duration, std::uint64_t seed,
                                  const SolverSettings& settings = {}) {
  Rng rng(seed);
  const double t = rng.uniform(0.0, max_duration);
  if (t == 0.0) return u;
  return grayscott_flow(u, GrayScottCoeffs{kGrayScottDA, kGrayScottDB, kGrayScottDelta, F, k}, t, settings);
}

enum class Benchmark { AdvDiff, Combined, GrayScott, NavierStokes, Euler, Diffusion2D };

inline constexpr std::array<Benchmark, 6> kAllBenchmarks = {Benchmark::AdvDiff,      Benchmark::Combined,
                                                            Benchmark::GrayScott,    Benchmark::NavierStokes,
                                                            Benchmark::Euler,        Benchmark::Diffusion2D};

inline std::string_view to_string(Benchmark b) {
  switch (b) {
    case Benchmark::AdvDiff: return "advdiff";
    case Benchmark::Combined: return "combined";
    case Benchmark::GrayScott: return "grayscott";
    case Benchmark::NavierStokes: return "navier_stokes";
    case Benchmark::Euler: return "euler";
    case Benchmark::Diffusion2D: return "diffusion_2d";
  }
  return "unknown";
}

inline Benchmark parse_benchmark(std::string_view name) {
  if (name == "ns") return Benchmark::NavierStokes;
  for (Benchmark b : kAllBenchmarks)
    if (to_string(b) == name) return b;
  throw InvalidArgument("unknown benchmark '" + std::string(name) + "'");
}

/// Per-benchmark defaults shared by generation, search and evaluation.
struct BenchmarkPreset {
  Benchmark benchmark = Benchmark::AdvDiff;
  Grid grid;
  double T = 0.0;
  int n_frames = 0;
  int context_len = 16;
  int horizon = 0;
  int trials = 100;
  int beam_width = 4;
  int max_len_uniform = 4;
  int max_len_beam = 5;
  double threshold = 0.05;
  std::size_t dictionary_size = 0;  // beam-search subsample size

  double dt() const { return T / (n_frames - 1); }
};

inline BenchmarkPreset preset(Benchmark b) {
  BenchmarkPreset p;
  p.benchmark = b;
  switch (b) {
    case Benchmark::AdvDiff:
      p.grid = Grid{1, 256, 16.0};
      p.T = 10.0;
      p.n_frames = 100;
      p.horizon = 34;
      p.dictionary_size = 256;
      break;
    case Benchmark::Combined:
      p.grid = Grid{1, 256, 16.0};
      p.T = 4.0;
      p.n_frames = 250;
      p.horizon = 50;
      p.dictionary_size = 96;
      break;
    case Benchmark::GrayScott:
      p.grid = Grid{2, 64, 2.0};
      p.T = 50.0;
      p.n_frames = 50;
      p.horizon = 32;
      p.trials = 200;
      p.beam_width = 8;
      p.dictionary_size = 40;
      break;
    case Benchmark::NavierStokes:
    case Benchmark::Euler:
    case Benchmark::Diffusion2D:
      p.grid = Grid{2, 64, kTwoPi};
      p.T = 4.0;
      p.n_frames = 50;
      p.horizon = 16;
      p.dictionary_size = 17;
      break;
  }
  return p;
}

/// Initial-condition recipe. Fields not used by the benchmark are ignored.
struct InitSpec {
  std::uint64_t seed = 0;
  int degree = 0;             // fractaloid; 0 means Nyquist
  double power = 3.0;         // fractaloid; test-time value
  int modes = 5;              // fourier mix J, or N_m in 2D
  int clusters = 3;           // clustered gaussians
  double warm_start = 100.0;  // Gray-Scott warm-up upper bound in seconds; 0 disables
};

struct GenerateOptions {
  std::optional<int> n_frames;  // defaults from the preset
  std::optional<double> T;
  std::optional<Grid> grid;
  std::size_t internal_points = 0;  // 2D vorticity: solve on a finer grid, truncate to grid.n
  SolverSettings settings;
};

namespace detail {

inline double coeff(const CoefficientMap& mu, const std::string& name, double fallback) {
  auto it = mu.find(name);
  return it == mu.end() ? fallback : it->second;
}

inline CoefficientMap canonical(const CoefficientMap& mu) {
  CoefficientMap out;
  for (const auto& [k, v] : mu) out[canonical_name(k)] = v;
  return out;
}

}  // namespace detail

/// Generates one trajectory with frames at uniform dt = T / (n_frames - 1).
/// Solver stability failures propagate as StabilityError.
inline Trajectory generate_benchmark(Benchmark b, const CoefficientMap& mu_in, const InitSpec& init,
                                     const GenerateOptions& opt = {}) {
  const BenchmarkPreset p = preset(b);
  const Grid g = opt.grid.value_or(p.grid);
  const int n_frames = opt.n_frames.value_or(p.n_frames);
  const double T = opt.T.value_or(p.T);
  require(n_frames >= 2, "generate_benchmark: need at least two frames");
  require(std::isfinite(T) && T > 0.0, "generate_benchmark: T must be positive");
  const double dt = T / (n_frames - 1);
  const CoefficientMap mu = detail::canonical(mu_in);
  for (const auto& [name, v] : mu) {
    require(std::isfinite(v), "generate_benchmark: coefficient '" + name + "' is not finite");
    require(!is_nonnegative_coefficient(name) || v >= 0.0, "generate_benchmark: '" + name + "' must be >= 0");
  }

  Trajectory traj;
  traj.dt = dt;
  traj.seed = init.seed;
  traj.generator = std::string(to_string(b));
  traj.solver_settings = opt.settings.describe();
  traj.frames.reserve(static_cast<std::size_t>(n_frames));
  auto allow = [&](std::initializer_list<const char*> names) {
    for (const auto& [name, v] : mu)
      require(std::any_of(names.begin(), names.end(), [&](const char* n) { return name == n; }),
              "generate_benchmark: coefficient '" + name + "' not used by " + traj.generator);
  };

  switch (b) {
    case Benchmark::AdvDiff: {
      allow({"c", "D"});
      require(g.dims == 1, "generate_benchmark: advdiff needs a 1D grid");
      const int degree = init.degree > 0 ? init.degree : static_cast<int>(g.n / 2);
      const Field u0 = init_fractaloid(g, degree, init.power, init.seed);
      const double c = detail::coeff(mu, "c", 0.0), D = detail::coeff(mu, "D", 0.0);
      for (int i = 0; i < n_frames; ++i) traj.frames.push_back(advdiff_exact_flow(u0, c, D, i * dt));
      traj.mu = {{"c", c}, {"D", D}};
      traj.solver_settings = {{"method", "analytic fourier"}};
      break;
    }
    case Benchmark::Combined: {
      allow({"alpha", "D", "gamma"});
      require(g.dims == 1, "generate_benchmark: combined needs a 1D grid");
      const double a = detail::coeff(mu, "alpha", 0.0), be = detail::coeff(mu, "D", 0.0),
                   ga = detail::coeff(mu, "gamma", 0.0);
      Field u = init_fourier_mix(g, init.modes, init.seed);
      traj.frames.push_back(u);
      for (int i = 1; i < n_frames; ++i) {
        u = combined_eq_flow(u, a, be, ga, dt, opt.settings);
        traj.frames.push_back(u);
      }
      traj.mu = {{"alpha", a}, {"D", be}, {"gamma", ga}};
      break;
    }
    case Benchmark::GrayScott: {
      allow({"D_A", "D_B", "delta", "F", "k"});
      require(g.dims == 2, "generate_benchmark: grayscott needs a 2D grid");
      const GrayScottCoeffs gs{detail::coeff(mu, "D_A", kGrayScottDA), detail::coeff(mu, "D_B", kGrayScottDB),
                               detail::coeff(mu, "delta", kGrayScottDelta), detail::coeff(mu, "F", 0.04),
                               detail::coeff(mu, "k", 0.06)};
      Field u = init_clustered_gaussians(g, init.clusters, init.seed);
      if (init.warm_start > 0.0) u = warm_start_grayscott(u, gs.F, gs.k, init.warm_start, init.seed + 1, opt.settings);
      traj.frames.push_back(u);
      for (int i = 1; i < n_frames; ++i) {
        u = grayscott_flow(u, gs, dt, opt.settings);
        traj.frames.push_back(u);
      }
      traj.mu = {{"D_A", gs.D_A}, {"D_B", gs.D_B}, {"delta", gs.delta}, {"F", gs.F}, {"k", gs.k}};
      break;
    }
    case Benchmark::NavierStokes:
    case Benchmark::Euler: {
      allow({"nu"});
      require(g.dims == 2, "generate_benchmark: vorticity benchmarks need a 2D grid");
      const double nu = b == Benchmark::Euler ? 0.0 : detail::coeff(mu, "nu", 1e-3);
      require(b != Benchmark::Euler || detail::coeff(mu, "nu", 0.0) == 0.0, "generate_benchmark: euler has nu = 0");
      const std::size_t n_int = opt.internal_points ? opt.internal_points : g.n;
      require(n_int >= g.n, "generate_benchmark: internal resolution below output resolution");
      const Field w0 = init_lowfreq_modes_2d(g.with_points(n_int), init.modes, init.seed);
      auto t = navier_stokes_reference(w0, nu, T, n_frames, opt.settings, g.n);
      traj.frames = std::move(t.frames);
      traj.solver_settings = std::move(t.solver_settings);
      traj.mu = {{"nu", nu}};
      break;
    }
    case Benchmark::Diffusion2D: {
      allow({"nu"});
      require(g.dims == 2, "generate_benchmark: diffusion_2d needs a 2D grid");
      const double nu = detail::coeff(mu, "nu", 1e-3);
      // start from an Euler state at a random time in [0, T]
      Rng rng(init.seed + 1);
      Field w = init_lowfreq_modes_2d(g, init.modes, init.seed);
      const double t0 = rng.uniform(0.0, T);
      if (t0 > 0.0) w = euler_flow(w, t0, opt.settings);
      for (int i = 0; i < n_frames; ++i) traj.frames.push_back(diffusion2d_flow(w, nu, i * dt));
      traj.mu = {{"nu", nu}};
      traj.solver_settings["method"] = "exact fourier";
      break;
    }
  }
  traj.validate();
  for (const auto& f : traj.frames)
    if (!f.finite()) throw StabilityError("generate_benchmark: non-finite frame");
  return traj;
}

}  // namespace opsplit
