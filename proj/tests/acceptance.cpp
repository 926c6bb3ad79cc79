// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Optional arguments select criteria by
// number, e.g. `acceptance 1 7`.

#include "flow_support.hpp"

#include "opsplit/experiments.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace opsplit;
using namespace opsplit::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double coeff_sum(const OperatorSubset& s, const std::string& name) {
  double total = 0.0;
  for (const auto& e : s.entries) {
    auto it = e.mu.find(name);
    if (it != e.mu.end()) total += it->second;
  }
  return total;
}

OperatorEntry flow_entry(int id, PhysicsParams p, const Grid& g, double dt, const SolverSettings& s = {}) {
  OperatorEntry e;
  e.id = id;
  e.params = p;
  e.mu = p.coeffs;
  e.flow = std::make_shared<FlowOperator>(p, g, dt, s);
  return e;
}

Outcome exact_composition() {
  const Trajectory truth = advdiff_truth(0.5, 0.3, 1);
  const Context ctx = Context::from(truth, 16);
  const Dictionary d = build_dictionary(advdiff_dictionary_spec(0.05, truth.dt));
  const auto r = beam_search(d, ctx, default_search_config(Benchmark::AdvDiff, Strategy::Beam));
  const double c = coeff_sum(r.best_subset, "c"), D = coeff_sum(r.best_subset, "D");
  const double roll = evaluate_rollout(r.best_subset, truth, 16, 34).nrmse;
  return {std::abs(c - 0.5) <= 0.05 && std::abs(D - 0.3) <= 0.05 && r.best_loss < 1e-9 && roll < 1e-8,
          fmt("c=%.4g D=%.4g loss=%.3g rollout=%.3g", c, D, r.best_loss, roll)};
}

Outcome extrapolation() {
  const Trajectory truth = advdiff_truth(2.5, 0.0, 2);
  const Dictionary d = advdiff_dictionary({0.5, 1.0, 1.5, 2.0}, {});
  const auto r = beam_search(d, Context::from(truth, 16), default_search_config(Benchmark::AdvDiff, Strategy::Beam));
  const double c = coeff_sum(r.best_subset, "c");
  const double roll = evaluate_rollout(r.best_subset, truth, 16, 34).nrmse;
  return {std::abs(c - 2.5) < 1e-12 && roll < 1e-8, fmt("sum c=%.6g entries=%zu rollout=%.3g", c,
                                                         r.best_subset.entries.size(), roll)};
}

Outcome splitting_orders() {
  const double lie = splitting_defect_ratio(Scheme::Lie, 0.1, 3);
  const double strang = splitting_defect_ratio(Scheme::Strang, 0.1, 3);
  return {std::abs(lie - 4.0) <= 1.2 && std::abs(strang - 8.0) <= 2.4, fmt("lie=%.3f strang=%.3f", lie, strang)};
}

Outcome brute_force_equivalence() {
  const Dictionary d = advdiff_dictionary({0.1, 0.2, 0.4, 0.8}, {0.05, 0.1, 0.2, 0.4});
  const int n = static_cast<int>(d.size());
  SearchConfig cfg = default_search_config(Benchmark::AdvDiff, Strategy::Beam);
  cfg.beam_width = 8;
  cfg.max_len = 3;
  cfg.threshold = 0.0;
  cfg.sort_by_id = true;
  int matched = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Context ctx = advdiff_context(0.1 * static_cast<double>(seed) + 0.05, 0.05 * static_cast<double>(seed), seed);
    double best = kLossSentinel;
    for (int mask = 1; mask < (1 << n); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) > 3) continue;
      std::vector<int> ids;
      for (int j = 0; j < n; ++j)
        if (mask & (1 << j)) ids.push_back(j);
      best = std::min(best, fitting_loss(make_subset(d, ids), ctx));
    }
    const double beam = beam_search(d, ctx, cfg).best_loss;
    matched += beam == best;
    detail += fmt("%s%.3g", seed == 1 ? "best=" : ",", best);
  }
  return {matched == 5, fmt("%d/5 exact; ", matched) + detail};
}

Outcome scaling_shape() {
  const Dictionary d = build_dictionary(advdiff_dictionary_spec(0.1, preset(Benchmark::AdvDiff).dt()));
  int not_worse = 0;
  bool monotone = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SearchConfig u = default_search_config(Benchmark::AdvDiff, Strategy::Uniform);
    u.seed = seed;
    const ScalingResult r = compare_strategies(d, advdiff_context(0.5, 0.3, seed), u,
                                               default_search_config(Benchmark::AdvDiff, Strategy::Beam));
    for (std::size_t i = 1; i < r.uniform.history.size(); ++i)
      monotone = monotone && r.uniform.history[i].best_loss <= r.uniform.history[i - 1].best_loss;
    not_worse += r.beam_not_worse();
    detail += fmt(" [%.2g<=%.2g]", r.beam_at_budget, r.uniform_at_budget);
  }
  return {monotone && not_worse == 5, fmt("monotone=%d beam<=uniform %d/5;", monotone, not_worse) + detail};
}

Outcome identification_scaling() {
  const Context ctx = advdiff_context(0.5, 0.3, 13);
  double previous = kLossSentinel;
  bool monotone = true;
  std::string detail = "mae";
  for (double spacing : {0.2, 0.1, 0.05}) {
    const Dictionary d = build_dictionary(advdiff_dictionary_spec(spacing, ctx.dt));
    const auto r = beam_search(d, ctx, default_search_config(Benchmark::AdvDiff, Strategy::Beam));
    const double mae = *with_truth(identify_parameters(r.best_subset, d), {{"c", 0.5}, {"D", 0.3}}).mae();
    monotone = monotone && mae <= previous;
    previous = mae;
    detail += fmt(" %g:%.3g", spacing, mae);
  }
  return {monotone && previous <= 0.05, detail};
}

// Split reaction / diffusion-kill over 32 benchmark steps, against one
// coupled solve with a tighter reaction substep.
Outcome grayscott_convergence() {
  const BenchmarkPreset p = preset(Benchmark::GrayScott);
  const Field u0 = generate_benchmark(Benchmark::GrayScott, {{"F", 0.04}, {"k", 0.06}}, InitSpec{.seed = 1},
                                      GenerateOptions{.n_frames = 2})
                       .frames[0];
  const double dt = p.dt();
  const int steps = 32;
  SolverSettings tight;
  tight.reaction_limit = 0.01;
  const Field ref = grayscott_flow(u0, GrayScottCoeffs{kGrayScottDA, kGrayScottDB, kGrayScottDelta, 0.04, 0.06},
                                   steps * dt, tight);
  std::vector<double> err;
  for (int h : {1, 2, 4}) {
    const double sdt = dt / h;
    const OperatorSubset s = subset_of(
        {flow_entry(0, PhysicsParams(PhysicsKind::ReactionGS, {{"delta", kGrayScottDelta}, {"F", 0.04}}), p.grid, sdt),
         flow_entry(1, PhysicsParams(PhysicsKind::DiffusionKillGS, {{"D_A", kGrayScottDA}, {"D_B", kGrayScottDB}, {"k", 0.06}}),
                    p.grid, sdt)});
    const auto r = rollout(s, u0, sdt, steps * h);
    err.push_back(r.ok() ? nrmse(r.trajectory.frames.back(), ref) : kLossSentinel);
  }
  const double r1 = err[0] / err[1], r2 = err[1] / err[2];
  return {r1 >= 3.0 && r2 >= 3.0, fmt("nrmse %.3g %.3g %.3g ratios %.3f %.3f", err[0], err[1], err[2], r1, r2)};
}

// Euler and exact diffusion, Strang split, against the coupled vorticity
// solver. Both sides run at CFL 0.05 so that time-integration error sits
// well below the splitting error being measured.
Outcome navier_stokes_convergence() {
  const BenchmarkPreset p = preset(Benchmark::NavierStokes);
  const Grid g = p.grid;
  const double dt = p.dt();
  const int steps = 16;
  SolverSettings tight;
  tight.cfl_euler = 0.05;
  const Field w0 = init_lowfreq_modes_2d(g, 5, 1);
  bool pass = true;
  std::string detail;
  for (double nu : {1e-2, 1e-3}) {
    const Trajectory ref = navier_stokes_reference(w0, nu, steps * dt, steps + 1, tight);
    double err[2];
    for (int k = 0; k < 2; ++k) {
      const int h = 1 << k;
      const double sdt = dt / h;
      const OperatorSubset s = subset_of({flow_entry(0, PhysicsParams(PhysicsKind::Euler2D, {}), g, sdt, tight),
                                          flow_entry(1, PhysicsParams(PhysicsKind::Diffusion2D, {{"nu", nu}}), g, sdt)});
      const auto r = rollout(s, w0, sdt, steps * h);
      double sum = 0.0;
      for (int i = 1; i <= steps; ++i)
        sum += r.ok() ? nrmse(r.trajectory.frames[static_cast<std::size_t>(i * h)], ref.frames[static_cast<std::size_t>(i)])
                      : kLossSentinel;
      err[k] = sum / steps;
    }
    const double ratio = err[0] / err[1];
    pass = pass && std::abs(ratio - 4.0) <= 1.2 && (nu != 1e-2 || err[0] <= 0.1);
    detail += fmt("%snu=%g nrmse %.3g ratio %.3f", detail.empty() ? "" : "; ", nu, err[0], ratio);
  }
  return {pass, detail};
}

Outcome weakest_link() {
  const auto rows = weakest_link_study();
  bool band = true, monotone = true;
  double lo = 1e300, hi = 0.0;
  for (const std::string sweep : {"joint", "fixed_heat"}) {
    const WeakestLinkRow* prev = nullptr;
    for (const auto& r : rows) {
      if (r.sweep != sweep) continue;
      lo = std::min(lo, r.ratio());
      hi = std::max(hi, r.ratio());
      band = band && r.ratio() >= 0.3 && r.ratio() <= 3.0;
      if (prev) monotone = monotone && r.split_rollout <= prev->split_rollout && r.split_next_step <= prev->split_next_step;
      prev = &r;
    }
  }
  return {band && monotone && rows.size() == 7, fmt("ratio range [%.3f, %.3f] monotone=%d", lo, hi, monotone)};
}

Outcome unit_suites() {
  std::istringstream list(OPSPLIT_UNIT_BINARIES);
  std::string bin, failed;
  int count = 0;
  const auto t0 = std::chrono::steady_clock::now();
  while (std::getline(list, bin, ';')) {
    ++count;
    const int status = std::system(("'" + bin + "' --gtest_brief=1 > /dev/null 2>&1").c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) failed += " " + bin.substr(bin.find_last_of('/') + 1);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {failed.empty() && secs < 300.0,
          fmt("%d suites in %.1f s", count, secs) + (failed.empty() ? "" : "; failed:" + failed)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "exact composition recovery", 30.0, exact_composition},
      {2, "parameter extrapolation", 0.0, extrapolation},
      {3, "splitting orders", 60.0, splitting_orders},
      {4, "beam matches exhaustive search", 0.0, brute_force_equivalence},
      {5, "beam vs uniform scaling", 0.0, scaling_shape},
      {6, "identification vs grid spacing", 0.0, identification_scaling},
      {7, "gray-scott strang convergence", 0.0, grayscott_convergence},
      {8, "navier-stokes strang convergence", 300.0, navier_stokes_convergence},
      {9, "weakest link", 0.0, weakest_link},
      {10, "unit suites", 0.0, unit_suites},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0 && secs >= c.limit_s) {
      o.pass = false;
      o.detail += fmt("; over %.0f s limit", c.limit_s);
    }
    failures += !o.pass;
    std::printf("%s %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
