#pragma once

// Single-physics flows f^t and the coupled reference solvers.
//
// Canonical coefficient names (aliases accepted by canonical_name()):
//   c      advection speed              (v)
//   D      1D diffusion                 (beta)
//   alpha  nonlinear advection, flux alpha * u^2
//   gamma  dispersion, flux gamma * u_xx
//   D_A, D_B  Gray-Scott diffusivities
//   delta  Gray-Scott reaction strength
//   F      Gray-Scott feed rate
//   k      Gray-Scott kill rate
//   nu     2D vorticity viscosity
//
// Stiff linear terms are always advanced exactly through their Fourier
// multiplier; only nonlinear terms are time-stepped.

#include "opsplit/error.hpp"
#include "opsplit/field.hpp"
#include "opsplit/random.hpp"
#include "opsplit/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace opsplit {

enum class PhysicsKind {
  Advection1D,
  Diffusion1D,
  NonlinAdvection1D,
  Dispersion1D,
  ReactionGS,
  DiffusionKillGS,
  Euler2D,
  Diffusion2D,
};

inline constexpr std::array<PhysicsKind, 8> kAllKinds = {
    PhysicsKind::Advection1D,     PhysicsKind::Diffusion1D, PhysicsKind::NonlinAdvection1D,
    PhysicsKind::Dispersion1D,    PhysicsKind::ReactionGS,  PhysicsKind::DiffusionKillGS,
    PhysicsKind::Euler2D,         PhysicsKind::Diffusion2D,
};

inline std::string_view to_string(PhysicsKind k) {
  switch (k) {
    case PhysicsKind::Advection1D: return "advection_1d";
    case PhysicsKind::Diffusion1D: return "diffusion_1d";
    case PhysicsKind::NonlinAdvection1D: return "nonlinear_advection_1d";
    case PhysicsKind::Dispersion1D: return "dispersion_1d";
    case PhysicsKind::ReactionGS: return "reaction_gs";
    case PhysicsKind::DiffusionKillGS: return "diffusion_kill_gs";
    case PhysicsKind::Euler2D: return "euler_2d";
    case PhysicsKind::Diffusion2D: return "diffusion_2d";
  }
  return "unknown";
}

inline PhysicsKind parse_kind(std::string_view name) {
  for (PhysicsKind k : kAllKinds)
    if (to_string(k) == name) return k;
  throw InvalidArgument("unknown physics kind '" + std::string(name) + "'");
}

inline std::string canonical_name(std::string_view name) {
  static const std::map<std::string, std::string, std::less<>> aliases = {
      {"v", "c"},         {"beta", "D"},     {"\xce\xb2", "D"},     {"\xce\xb1", "alpha"},
      {"\xce\xb3", "gamma"}, {"\xce\xb4", "delta"}, {"\xce\xbd", "nu"}, {"kill", "k"},
      {"feed", "F"},
  };
  if (auto it = aliases.find(name); it != aliases.end()) return it->second;
  return std::string(name);
}

/// Coefficients a kind carries, in canonical names.
inline std::vector<std::string> coefficient_names(PhysicsKind k) {
  switch (k) {
    case PhysicsKind::Advection1D: return {"c"};
    case PhysicsKind::Diffusion1D: return {"D"};
    case PhysicsKind::NonlinAdvection1D: return {"alpha"};
    case PhysicsKind::Dispersion1D: return {"gamma"};
    case PhysicsKind::ReactionGS: return {"delta", "F"};
    case PhysicsKind::DiffusionKillGS: return {"D_A", "D_B", "k"};
    case PhysicsKind::Euler2D: return {};
    case PhysicsKind::Diffusion2D: return {"nu"};
  }
  return {};
}

inline bool is_nonnegative_coefficient(std::string_view name) {
  return name == "D" || name == "D_A" || name == "D_B" || name == "nu";
}

inline int spatial_dims(PhysicsKind k) {
  switch (k) {
    case PhysicsKind::Advection1D:
    case PhysicsKind::Diffusion1D:
    case PhysicsKind::NonlinAdvection1D:
    case PhysicsKind::Dispersion1D: return 1;
    default: return 2;
  }
}

inline int field_channels(PhysicsKind k) {
  return k == PhysicsKind::ReactionGS || k == PhysicsKind::DiffusionKillGS ? 2 : 1;
}

struct PhysicsParams {
  PhysicsKind kind = PhysicsKind::Advection1D;
  CoefficientMap coeffs;

  PhysicsParams() = default;
  PhysicsParams(PhysicsKind k, const CoefficientMap& c) : kind(k) {
    for (const auto& [name, value] : c) coeffs[canonical_name(name)] = value;
    validate();
  }

  double get(const std::string& name) const {
    auto it = coeffs.find(name);
    return it == coeffs.end() ? 0.0 : it->second;
  }

  void validate() const {
    const auto allowed = coefficient_names(kind);
    for (const auto& [name, value] : coeffs) {
      require(std::find(allowed.begin(), allowed.end(), name) != allowed.end(),
              "coefficient '" + name + "' does not belong to kind " + std::string(to_string(kind)));
      require(std::isfinite(value), "coefficient '" + name + "' is not finite");
      require(!is_nonnegative_coefficient(name) || value >= 0.0, "coefficient '" + name + "' must be >= 0");
    }
  }

  friend bool operator==(const PhysicsParams&, const PhysicsParams&) = default;
};

/// Numerical controls shared by the stepped flows.
struct SolverSettings {
  double cfl_advective = 0.4;  // combined equation, on 2|alpha| max|u|
  double cfl_euler = 0.5;      // vorticity advection
  double reaction_limit = 0.1; // max(delta B^2, F + k) * substep
  double fixed_point_tol = 1e-10;
  int fixed_point_max_iter = 50;
  int min_substeps = 1;

  std::map<std::string, std::string> describe() const {
    return {{"cfl_advective", std::to_string(cfl_advective)},
            {"cfl_euler", std::to_string(cfl_euler)},
            {"reaction_limit", std::to_string(reaction_limit)},
            {"fixed_point_tol", std::to_string(fixed_point_tol)},
            {"fixed_point_max_iter", std::to_string(fixed_point_max_iter)},
            {"min_substeps", std::to_string(min_substeps)}};
  }
};

namespace detail {

inline void check_finite(const Spectrum& s, const char* who) {
  for (const Complex& z : s.coeffs())
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw StabilityError(std::string(who) + ": solution blew up (non-finite values)");
}

inline void check_finite(const Field& f, const char* who) {
  if (!f.finite()) throw StabilityError(std::string(who) + ": solution blew up (non-finite values)");
}

inline void require_shape(const Field& u, int dims, int channels, const char* who) {
  require(u.grid().dims == dims && u.channels() == channels,
          std::string(who) + ": expected a " + std::to_string(dims) + "D field with " +
              std::to_string(channels) + " channel(s)");
  require(u.finite(), std::string(who) + ": input contains non-finite values");
}

inline int substeps_for(double t, double rate, double limit, int min_substeps) {
  int n = std::max(1, min_substeps);
  if (rate > 0.0 && t > 0.0) n = std::max(n, static_cast<int>(std::ceil(t * rate / limit)));
  return n;
}

// Lawson (integrating-factor) RK4 for v' = L v + N(v) with diagonal L given
// per channel as `lin` (one entry per stored mode).
template <class Nonlinear>
Spectrum lawson_rk4(Spectrum v, const std::vector<std::vector<Complex>>& lin, double t, int substeps,
                    Nonlinear&& nonlinear, const char* who) {
  const double h = t / substeps;
  const std::size_t modes = v.grid().modes();
  std::vector<std::vector<Complex>> e_full(lin.size()), e_half(lin.size());
  for (std::size_t c = 0; c < lin.size(); ++c) {
    e_full[c].resize(modes);
    e_half[c].resize(modes);
    for (std::size_t i = 0; i < modes; ++i) {
      e_full[c][i] = std::exp(lin[c][i] * h);
      e_half[c][i] = std::exp(lin[c][i] * (0.5 * h));
    }
  }
  auto combine = [&](auto&& op) {
    Spectrum out(v.grid(), v.channels());
    for (int c = 0; c < v.channels(); ++c) {
      auto o = out.channel(c);
      for (std::size_t i = 0; i < modes; ++i) o[i] = op(static_cast<std::size_t>(c), i);
    }
    return out;
  };

  auto eval = [&](const Spectrum& stage) {
    check_finite(stage, who);
    return nonlinear(stage);
  };
  for (int s = 0; s < substeps; ++s) {
    const Spectrum k1 = eval(v);
    const Spectrum k2 = eval(combine([&](std::size_t c, std::size_t i) {
      const std::size_t j = c * modes + i;
      return e_half[c][i] * (v[j] + 0.5 * h * k1[j]);
    }));
    const Spectrum k3 = eval(combine([&](std::size_t c, std::size_t i) {
      const std::size_t j = c * modes + i;
      return e_half[c][i] * v[j] + 0.5 * h * k2[j];
    }));
    const Spectrum k4 = eval(combine([&](std::size_t c, std::size_t i) {
      const std::size_t j = c * modes + i;
      return e_full[c][i] * v[j] + h * e_half[c][i] * k3[j];
    }));
    v = combine([&](std::size_t c, std::size_t i) {
      const std::size_t j = c * modes + i;
      return e_full[c][i] * v[j] +
             h / 6.0 * (e_full[c][i] * k1[j] + 2.0 * e_half[c][i] * (k2[j] + k3[j]) + k4[j]);
    });
    check_finite(v, who);
  }
  return v;
}

}  // namespace detail

/// Exact advection-diffusion flow: each mode is multiplied by
/// exp(-D k^2 t) exp(-i k c t). The Nyquist mode only decays.
inline Field advdiff_exact_flow(const Field& u, double c, double D, double t) {
  detail::require_shape(u, 1, 1, "advdiff_exact_flow");
  require(std::isfinite(c) && std::isfinite(D), "advdiff_exact_flow: coefficients must be finite");
  require(D >= 0.0, "advdiff_exact_flow: negative diffusion is ill-posed");
  require(t >= 0.0, "advdiff_exact_flow: t must be >= 0");
  Spectrum s = forward_transform(u);
  apply_multiplier(s, [&](double k, double, bool nyq) {
    const double decay = std::exp(-D * k * k * t);
    return nyq ? Complex{decay, 0.0} : decay * std::exp(Complex{0.0, -k * c * t});
  });
  return inverse_transform(s);
}

/// Combined equation u_t + (alpha u^2 - beta u_x + gamma u_xx)_x = 0.
/// Linear terms use the exact multiplier exp((-beta k^2 + i gamma k^3) t);
/// the flux alpha (u^2)_x is dealiased and advanced with Lawson RK4 on
/// uniform substeps with 2|alpha| max|u| h / dx <= cfl_advective.
inline Field combined_eq_flow(const Field& u, double alpha, double beta, double gamma, double t,
                              const SolverSettings& settings = {}) {
  detail::require_shape(u, 1, 1, "combined_eq_flow");
  require(std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma),
          "combined_eq_flow: coefficients must be finite");
  require(beta >= 0.0, "combined_eq_flow: beta must be >= 0");
  require(t >= 0.0, "combined_eq_flow: t must be >= 0");

  const Grid& g = u.grid();
  std::vector<std::vector<Complex>> lin(1, std::vector<Complex>(g.modes()));
  std::vector<Complex> ik(g.modes());
  for_each_mode(g, [&](std::size_t i, double k, double, bool nyq) {
    lin[0][i] = Complex{-beta * k * k, nyq ? 0.0 : gamma * k * k * k};
    ik[i] = nyq ? Complex{} : Complex{0.0, k};
  });

  Spectrum v = forward_transform(u);
  if (alpha == 0.0) {
    for (std::size_t i = 0; i < g.modes(); ++i) v[i] *= std::exp(lin[0][i] * t);
    detail::check_finite(v, "combined_eq_flow");
    return inverse_transform(v);
  }

  const double rate = 2.0 * std::abs(alpha) * max_abs(u.values()) / g.spacing();
  const int substeps = detail::substeps_for(t, rate, settings.cfl_advective, settings.min_substeps);
  auto nonlinear = [&](const Spectrum& w) {
    Spectrum sq = dealiased_product([](double a) { return a * a; }, w);
    for (std::size_t i = 0; i < g.modes(); ++i) sq[i] *= -alpha * ik[i];
    return sq;
  };
  v = detail::lawson_rk4(std::move(v), lin, t, substeps, nonlinear, "combined_eq_flow");
  Field out = inverse_transform(v);
  detail::check_finite(out, "combined_eq_flow");
  return out;
}

struct GrayScottCoeffs {
  double D_A = 0.0;
  double D_B = 0.0;
  double delta = 0.0;
  double F = 0.0;
  double k = 0.0;
};

/// Gray-Scott step for channels (A, B):
///   A_t = D_A lap A - delta A B^2 + F (1 - A)
///   B_t = D_B lap B + delta A B^2 - (F + k) B
/// Diffusion and the linear kill term go through the exact multiplier; the
/// reaction and feed terms are evaluated pointwise in physical space and
/// advanced with Lawson RK4, substepped so max(delta B^2, F + k) h <= limit.
inline Field grayscott_flow(const Field& u, const GrayScottCoeffs& gs, double t,
                            const SolverSettings& settings = {}) {
  detail::require_shape(u, 2, 2, "grayscott_flow");
  require(gs.D_A >= 0.0 && gs.D_B >= 0.0, "grayscott_flow: diffusivities must be >= 0");
  require(std::isfinite(gs.delta) && std::isfinite(gs.F) && std::isfinite(gs.k),
          "grayscott_flow: coefficients must be finite");
  require(t >= 0.0, "grayscott_flow: t must be >= 0");

  const Grid& g = u.grid();
  std::vector<std::vector<Complex>> lin(2, std::vector<Complex>(g.modes()));
  for_each_mode(g, [&](std::size_t i, double kx, double ky, bool) {
    const double k2 = kx * kx + ky * ky;
    lin[0][i] = -gs.D_A * k2;
    lin[1][i] = -gs.D_B * k2 - gs.k;
  });

  Spectrum v = forward_transform(u);
  const bool reacting = gs.delta != 0.0 || gs.F != 0.0;
  if (!reacting) {
    for (int c = 0; c < 2; ++c) {
      auto ch = v.channel(c);
      for (std::size_t i = 0; i < ch.size(); ++i) ch[i] *= std::exp(lin[static_cast<std::size_t>(c)][i] * t);
    }
    detail::check_finite(v, "grayscott_flow");
    return inverse_transform(v);
  }

  const double bmax = max_abs(u.channel(1));
  const double rate = std::max(std::abs(gs.delta) * bmax * bmax, std::abs(gs.F + gs.k));
  const int substeps = detail::substeps_for(t, rate, settings.reaction_limit, settings.min_substeps);
  auto nonlinear = [&](const Spectrum& w) {
    Field f = inverse_transform(w);
    detail::check_finite(f, "grayscott_flow");
    auto a = f.channel(0);
    auto b = f.channel(1);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double r = gs.delta * a[i] * b[i] * b[i];
      const double na = -r + gs.F * (1.0 - a[i]);
      const double nb = r - gs.F * b[i];
      a[i] = na;
      b[i] = nb;
    }
    return detail::forward_unchecked(f);
  };
  v = detail::lawson_rk4(std::move(v), lin, t, substeps, nonlinear, "grayscott_flow");
  Field out = inverse_transform(v);
  detail::check_finite(out, "grayscott_flow");
  return out;
}

/// Exact heat flow for 2D vorticity: each mode times exp(-nu |k|^2 t).
inline Field diffusion2d_flow(const Field& w, double nu, double t) {
  require(w.grid().dims == 2, "diffusion2d_flow: expected a 2D field");
  require(w.finite(), "diffusion2d_flow: input contains non-finite values");
  require(std::isfinite(nu) && nu >= 0.0, "diffusion2d_flow: nu must be >= 0");
  require(t >= 0.0, "diffusion2d_flow: t must be >= 0");
  Spectrum s = forward_transform(w);
  apply_multiplier(s, [&](double kx, double ky, bool) { return Complex{std::exp(-nu * (kx * kx + ky * ky) * t), 0.0}; });
  return inverse_transform(s);
}

/// Velocity (u, v) = (-psi_y, psi_x) with -lap psi = w, evaluated on the grid.
inline std::array<Field, 2> vorticity_velocity(const Field& w) {
  const Grid& g = w.grid();
  Spectrum psi = forward_transform(w);
  apply_multiplier(psi, [](double kx, double ky, bool) {
    const double k2 = kx * kx + ky * ky;
    return Complex{k2 > 0.0 ? 1.0 / k2 : 0.0, 0.0};
  });
  Spectrum ux = derivative(psi, 1, 1);
  ux *= Complex{-1.0, 0.0};
  Spectrum uy = derivative(psi, 0, 1);
  (void)g;
  return {inverse_transform(ux), inverse_transform(uy)};
}

/// Kinetic energy (1/2) mean |u|^2 and enstrophy (1/2) mean w^2.
inline std::pair<double, double> vorticity_invariants(const Field& w) {
  const auto vel = vorticity_velocity(w);
  double e = 0.0, z = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    e += vel[0][i] * vel[0][i] + vel[1][i] * vel[1][i];
    z += w[i] * w[i];
  }
  const double n = static_cast<double>(w.size());
  return {0.5 * e / n, 0.5 * z / n};
}

namespace detail {

// -(u . grad w) in spectral form, dealiased by the 3/2 rule.
inline Spectrum vorticity_advection(const Spectrum& w) {
  Spectrum psi = w;
  apply_multiplier(psi, [](double kx, double ky, bool) {
    const double k2 = kx * kx + ky * ky;
    return Complex{k2 > 0.0 ? 1.0 / k2 : 0.0, 0.0};
  });
  Spectrum ux = derivative(psi, 1, 1);
  ux *= Complex{-1.0, 0.0};
  const Spectrum uy = derivative(psi, 0, 1);
  const Spectrum wx = derivative(w, 0, 1);
  const Spectrum wy = derivative(w, 1, 1);
  Spectrum adv = dealiased_product([](double a, double b, double c, double d) { return -(a * c + b * d); },
                                   ux, uy, wx, wy);
  return adv;
}

}  // namespace detail

/// Advances w_t + u . grad w = nu lap w by time t with implicit midpoint
/// substeps (diffusion inside the midpoint solve, so its linear part reduces
/// to a Crank-Nicolson factor). Each substep solves the midpoint equation by
/// fixed-point iteration to relative residual fixed_point_tol. Substeps obey
/// max(|u| + |v|) h / dx <= cfl_euler.
inline Field vorticity_flow(const Field& w0, double nu, double t, const SolverSettings& settings = {}) {
  detail::require_shape(w0, 2, 1, "vorticity_flow");
  require(std::isfinite(nu) && nu >= 0.0, "vorticity_flow: nu must be >= 0");
  require(t >= 0.0, "vorticity_flow: t must be >= 0");
  const Grid& g = w0.grid();
  if (t == 0.0) return w0;

  std::vector<double> k2(g.modes());
  for_each_mode(g, [&](std::size_t i, double kx, double ky, bool) { k2[i] = kx * kx + ky * ky; });

  Spectrum w = forward_transform(w0);
  zero_nyquist(w);
  const double h_floor = t / std::max(1, settings.min_substeps);
  double elapsed = 0.0;
  bool done = false;
  while (!done) {
    // the CFL bound is re-evaluated on the current state before every substep
    const auto vel = vorticity_velocity(inverse_transform(w));
    double speed = 0.0;
    for (std::size_t i = 0; i < vel[0].size(); ++i)
      speed = std::max(speed, std::abs(vel[0][i]) + std::abs(vel[1][i]));
    const double remaining = t - elapsed;
    double h_max = h_floor;
    if (speed > 0.0) h_max = std::min(h_max, settings.cfl_euler * g.spacing() / speed);
    const int n = std::max(1, static_cast<int>(std::ceil(remaining / h_max - 1e-9)));
    const double h = remaining / n;
    done = n == 1;

    // explicit Euler predictor, then fixed-point corrections
    Spectrum next = w;
    {
      const Spectrum adv = detail::vorticity_advection(w);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] = (w[i] * (1.0 - h * nu * k2[i]) + h * adv[i]);
    }
    double residual = 1.0;
    int iter = 0;
    for (; iter < settings.fixed_point_max_iter; ++iter) {
      Spectrum mid = w;
      for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (w[i] + next[i]);
      const Spectrum adv = detail::vorticity_advection(mid);
      Spectrum candidate(g, 1);
      double diff = 0.0, norm = 0.0;
      for (std::size_t i = 0; i < candidate.size(); ++i) {
        const double a = 0.5 * h * nu * k2[i];
        candidate[i] = ((1.0 - a) * w[i] + h * adv[i]) / (1.0 + a);
        diff += std::norm(candidate[i] - next[i]);
        norm += std::norm(candidate[i]);
      }
      next = std::move(candidate);
      detail::check_finite(next, "vorticity_flow");
      residual = norm > 0.0 ? std::sqrt(diff / norm) : std::sqrt(diff);
      if (residual <= settings.fixed_point_tol) break;
    }
    if (residual > settings.fixed_point_tol)
      throw StabilityError("vorticity_flow: implicit midpoint fixed point did not converge (residual " +
                           std::to_string(residual) + ")");
    w = std::move(next);
    elapsed += h;
  }
  Field out = inverse_transform(w);
  detail::check_finite(out, "vorticity_flow");
  return out;
}

/// Inviscid 2D Euler flow of the vorticity.
inline Field euler_flow(const Field& w, double t, const SolverSettings& settings = {}) {
  return vorticity_flow(w, 0.0, t, settings);
}

/// Coupled Navier-Stokes reference: n_snap frames uniformly spaced over
/// [0, T], optionally spectrally truncated to `output_points` per axis.
inline Trajectory navier_stokes_reference(const Field& w0, double nu, double T, int n_snap,
                                          const SolverSettings& settings = {}, std::size_t output_points = 0) {
  require(n_snap >= 2, "navier_stokes_reference: need at least two snapshots");
  require(std::isfinite(T) && T > 0.0, "navier_stokes_reference: T must be positive");
  const std::size_t out_n = output_points == 0 ? w0.grid().n : output_points;
  require(out_n <= w0.grid().n, "navier_stokes_reference: output grid finer than simulation grid");

  Trajectory traj;
  traj.dt = T / (n_snap - 1);
  traj.mu = {{"nu", nu}};
  traj.generator = nu == 0.0 ? "euler_2d" : "navier_stokes_2d";
  traj.solver_settings = settings.describe();
  traj.solver_settings["simulation_points"] = std::to_string(w0.grid().n);

  Field w = w0;
  traj.frames.push_back(resample(w, out_n));
  for (int i = 1; i < n_snap; ++i) {
    w = vorticity_flow(w, nu, traj.dt, settings);
    traj.frames.push_back(resample(w, out_n));
  }
  return traj;
}

/// Abstract flow f^t. The splitting and search layers only see this
/// interface, so any backend that can advance a field fits.
class Flow {
public:
  virtual ~Flow() = default;
  virtual Field advance(const Field& u, double t) const = 0;
};

/// Parametric single-physics flow on a fixed grid with a native step.
class FlowOperator final : public Flow {
public:
  FlowOperator(PhysicsParams params, Grid grid, double dt, SolverSettings settings = {})
      : params_(std::move(params)), grid_(grid), dt_(dt), settings_(settings) {
    params_.validate();
    grid_.validate();
    require(std::isfinite(dt_) && dt_ > 0.0, "flow operator: dt must be positive");
    require(grid_.dims == spatial_dims(params_.kind),
            "flow operator: grid dimension does not match kind " + std::string(to_string(params_.kind)));
  }

  const PhysicsParams& params() const { return params_; }
  const Grid& grid() const { return grid_; }
  double dt() const { return dt_; }
  const SolverSettings& settings() const { return settings_; }

  Field step(const Field& u) const { return advance(u, dt_); }

  Field advance(const Field& u, double t) const override {
    require(u.grid() == grid_, "flow operator: field grid does not match operator grid");
    const auto& p = params_;
    switch (p.kind) {
      case PhysicsKind::Advection1D: return advdiff_exact_flow(u, p.get("c"), 0.0, t);
      case PhysicsKind::Diffusion1D: return advdiff_exact_flow(u, 0.0, p.get("D"), t);
      case PhysicsKind::NonlinAdvection1D: return combined_eq_flow(u, p.get("alpha"), 0.0, 0.0, t, settings_);
      case PhysicsKind::Dispersion1D: return combined_eq_flow(u, 0.0, 0.0, p.get("gamma"), t, settings_);
      case PhysicsKind::ReactionGS:
        return grayscott_flow(u, GrayScottCoeffs{0.0, 0.0, p.get("delta"), p.get("F"), 0.0}, t, settings_);
      case PhysicsKind::DiffusionKillGS:
        return grayscott_flow(u, GrayScottCoeffs{p.get("D_A"), p.get("D_B"), 0.0, 0.0, p.get("k")}, t, settings_);
      case PhysicsKind::Euler2D: return euler_flow(u, t, settings_);
      case PhysicsKind::Diffusion2D: return diffusion2d_flow(u, p.get("nu"), t);
    }
    throw InvalidArgument("flow operator: unhandled kind");
  }

private:
  PhysicsParams params_;
  Grid grid_;
  double dt_;
  SolverSettings settings_;
};

/// Multiplies every coefficient of the operator by `factor`.
inline FlowOperator scale_coefficients(const FlowOperator& op, double factor) {
  PhysicsParams p = op.params();
  for (auto& [name, value] : p.coeffs) value *= factor;
  return FlowOperator(p, op.grid(), op.dt(), op.settings());
}

/// Emulates an imperfect operator: all coefficients scaled by (1 + eps) with
/// eps uniform in [-relative_error, relative_error] drawn from `seed`.
inline FlowOperator perturb_operator(const FlowOperator& op, double relative_error, std::uint64_t seed) {
  require(std::isfinite(relative_error) && relative_error >= 0.0, "perturb_operator: relative_error must be >= 0");
  if (relative_error == 0.0) return op;
  Rng rng(seed);
  const double eps = relative_error * (2.0 * rng.uniform01() - 1.0);
  return scale_coefficients(op, 1.0 + eps);
}

}  // namespace opsplit
