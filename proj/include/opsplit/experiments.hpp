#pragma once

// Benchmark dictionaries, the beam-versus-uniform scaling comparison and the
// weakest-link study. Shared by the command-line tool and the test suites.

#include "opsplit/datagen.hpp"
#include "opsplit/dictionary.hpp"
#include "opsplit/identify.hpp"
#include "opsplit/physics.hpp"
#include "opsplit/search.hpp"
#include "opsplit/splitting.hpp"

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace opsplit {

/// Advection and diffusion on the grid {s, 2s, ..., 1}, s = spacing.
inline DictionarySpec advdiff_dictionary_spec(double spacing, double dt, Grid grid = preset(Benchmark::AdvDiff).grid) {
  require(spacing > 0.0 && spacing <= 1.0, "advdiff dictionary: spacing must be in (0, 1]");
  const int count = static_cast<int>(std::lround(1.0 / spacing));
  DictionarySpec s;
  s.grid = grid;
  s.dt = dt;
  s.operators = {{PhysicsKind::Advection1D, "c", linear_range(spacing, count * spacing, count), {}},
                 {PhysicsKind::Diffusion1D, "D", linear_range(spacing, count * spacing, count), {}}};
  return s;
}

/// Dictionary matching a benchmark's training operators:
///   advdiff        c, D in {0.05, ..., 1.0}                         40 entries
///   combined       alpha, gamma in {1/32, ..., 1}, D in {0.0125, ..., 0.4}  96
///   grayscott      reaction F in {0.005, ..., 0.1} with delta = 1,
///                  diffusion-kill k in {0.051, ..., 0.070}            40
///   vorticity      16 log-spaced nu in [1e-4, 1e-2] plus Euler        17
inline DictionarySpec benchmark_dictionary_spec(Benchmark b, double dt) {
  const BenchmarkPreset p = preset(b);
  DictionarySpec s;
  s.grid = p.grid;
  s.dt = dt;
  switch (b) {
    case Benchmark::AdvDiff: return advdiff_dictionary_spec(0.05, dt, p.grid);
    case Benchmark::Combined:
      s.operators = {{PhysicsKind::NonlinAdvection1D, "alpha", linear_range(1.0 / 32, 1.0, 32), {}},
                     {PhysicsKind::Diffusion1D, "D", linear_range(0.4 / 32, 0.4, 32), {}},
                     {PhysicsKind::Dispersion1D, "gamma", linear_range(1.0 / 32, 1.0, 32), {}}};
      break;
    case Benchmark::GrayScott:
      s.operators = {{PhysicsKind::ReactionGS, "F", linear_range(0.005, 0.1, 20), {{"delta", kGrayScottDelta}}},
                     {PhysicsKind::DiffusionKillGS, "k", linear_range(0.051, 0.070, 20),
                      {{"D_A", kGrayScottDA}, {"D_B", kGrayScottDB}}}};
      break;
    case Benchmark::NavierStokes:
    case Benchmark::Euler:
    case Benchmark::Diffusion2D:
      s.operators = {{PhysicsKind::Euler2D, "", {}, {}},
                     {PhysicsKind::Diffusion2D, "nu", log_range(1e-4, 1e-2, 16), {}}};
      break;
  }
  return s;
}

/// Preset search configuration for a benchmark.
inline SearchConfig default_search_config(Benchmark b, Strategy strategy) {
  const BenchmarkPreset p = preset(b);
  SearchConfig c;
  c.strategy = strategy;
  c.trials = p.trials;
  c.beam_width = p.beam_width;
  c.max_len = strategy == Strategy::Uniform ? p.max_len_uniform : p.max_len_beam;
  c.threshold = p.threshold;
  return c;
}

/// CSV row: benchmark,c_or_coeffs,strategy,nrmse,evaluations,identified_params
struct EvalRow {
  std::string benchmark;
  CoefficientMap truth;
  Strategy strategy = Strategy::Beam;
  double nrmse = kLossSentinel;
  long evaluations = 0;
  CoefficientMap identified;
};

inline void write_eval_header(std::ostream& os) {
  os << "benchmark,c_or_coeffs,strategy,nrmse,evaluations,identified_params\n";
}

inline void write_eval_row(std::ostream& os, const EvalRow& r) {
  os.precision(17);
  os << r.benchmark << ',' << format_coefficients(r.truth) << ',' << to_string(r.strategy) << ',' << r.nrmse << ','
     << r.evaluations << ',' << format_coefficients(r.identified) << '\n';
}

struct ScalingResult {
  SearchReport uniform;
  SearchReport beam;
  long long budget = 0;  // cost at which beam finished level 1
  double uniform_at_budget = kLossSentinel;
  double beam_at_budget = kLossSentinel;

  bool beam_not_worse() const { return beam_at_budget <= uniform_at_budget; }
};

/// Runs both strategies on one context and compares them at beam's level-1 budget.
inline ScalingResult compare_strategies(const Dictionary& d, const Context& ctx, SearchConfig uniform_cfg,
                                        SearchConfig beam_cfg) {
  uniform_cfg.strategy = Strategy::Uniform;
  beam_cfg.strategy = Strategy::Beam;
  ScalingResult r;
  r.uniform = uniform_search(d, ctx, uniform_cfg);
  r.beam = beam_search(d, ctx, beam_cfg);
  r.budget = r.beam.level1_applications;
  r.uniform_at_budget = best_loss_at(r.uniform, r.budget);
  r.beam_at_budget = best_loss_at(r.beam, r.budget);
  return r;
}

// ---------------------------------------------------------------------------
// Weakest-link study: heat (D) and dispersion (gamma) flows with controlled
// coefficient errors, composed by Strang splitting and compared with the
// exact coupled flow.

struct WeakestLinkConfig {
  double heat = 0.2;        // D
  double dispersion = 0.5;  // gamma
  std::vector<double> eps = {1e-1, 1e-2, 1e-3};
  double fixed_heat_eps = 1e-3;
  int rollout_steps = 250;
  std::uint64_t seed = 0;
};

struct WeakestLinkRow {
  std::string sweep;  // "baseline", "joint" or "fixed_heat"
  double eps_heat = 0.0;
  double eps_dispersion = 0.0;
  double heat_err = 0.0;
  double dispersion_err = 0.0;
  double split_next_step = 0.0;
  double split_rollout = 0.0;

  double max_individual() const { return std::max(heat_err, dispersion_err); }
  double ratio() const { return max_individual() > 0.0 ? split_next_step / max_individual() : 0.0; }
};

namespace detail {

/// Exact flow of u_t = D u_xx - gamma u_xxx.
inline Field heat_dispersion_exact(const Field& u, double D, double gamma, double t) {
  Spectrum s = forward_transform(u);
  apply_multiplier(s, [&](double k, double, bool nyq) {
    const double decay = std::exp(-D * k * k * t);
    return nyq ? Complex{decay, 0.0} : decay * std::polar(1.0, gamma * k * k * k * t);
  });
  return inverse_transform(s);
}

}  // namespace detail

inline std::vector<WeakestLinkRow> weakest_link_study(const WeakestLinkConfig& cfg = {}) {
  const BenchmarkPreset p = preset(Benchmark::Combined);
  const Grid g = p.grid;
  const double dt = p.dt();
  const Field u0 = init_fourier_mix(g, 5, cfg.seed);

  const FlowOperator heat(PhysicsParams(PhysicsKind::Diffusion1D, {{"D", cfg.heat}}), g, dt);
  const FlowOperator disp(PhysicsParams(PhysicsKind::Dispersion1D, {{"gamma", cfg.dispersion}}), g, dt);

  // reference rollout of the coupled dynamics
  std::vector<Field> truth{u0};
  for (int i = 0; i < cfg.rollout_steps; ++i)
    truth.push_back(detail::heat_dispersion_exact(truth.back(), cfg.heat, cfg.dispersion, dt));

  auto entry = [](const FlowOperator& op, int id) {
    OperatorEntry e;
    e.id = id;
    e.flow = std::make_shared<FlowOperator>(op);
    e.params = op.params();
    return e;
  };

  auto measure = [&](const std::string& sweep, double eh, double ed) {
    const FlowOperator h = perturb_operator(heat, eh, cfg.seed * 2 + 11);
    const FlowOperator d = perturb_operator(disp, ed, cfg.seed * 2 + 12);
    WeakestLinkRow row;
    row.sweep = sweep;
    row.eps_heat = eh;
    row.eps_dispersion = ed;
    row.heat_err = nrmse(h.step(u0), heat.step(u0));
    row.dispersion_err = nrmse(d.step(u0), disp.step(u0));
    OperatorSubset s;
    s.scheme = Scheme::Strang;
    s.entries = {entry(h, 0), entry(d, 1)};
    row.split_next_step = nrmse(strang_step(s, u0, dt), truth[1]);
    const auto r = rollout(s, u0, dt, cfg.rollout_steps);
    std::vector<Field> pred(r.trajectory.frames.begin() + 1, r.trajectory.frames.end());
    std::vector<Field> ref(truth.begin() + 1, truth.begin() + 1 + static_cast<std::ptrdiff_t>(pred.size()));
    row.split_rollout = r.ok() ? nrmse(pred, ref) : kLossSentinel;
    return row;
  };

  std::vector<WeakestLinkRow> rows;
  rows.push_back(measure("baseline", 0.0, 0.0));
  for (double e : cfg.eps) rows.push_back(measure("joint", e, e));
  for (double e : cfg.eps) rows.push_back(measure("fixed_heat", cfg.fixed_heat_eps, e));
  return rows;
}

inline void write_weakest_link_csv(std::ostream& os, const std::vector<WeakestLinkRow>& rows) {
  os << "sweep,eps_heat,eps_dispersion,heat_err,dispersion_err,split_next_step,split_rollout,max_individual,ratio\n";
  os.precision(10);
  for (const auto& r : rows)
    os << r.sweep << ',' << r.eps_heat << ',' << r.eps_dispersion << ',' << r.heat_err << ',' << r.dispersion_err
       << ',' << r.split_next_step << ',' << r.split_rollout << ',' << r.max_individual() << ',' << r.ratio()
       << '\n';
}

}  // namespace opsplit
