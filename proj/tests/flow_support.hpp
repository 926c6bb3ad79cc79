#pragma once

// Test flows and dictionary fixtures for the splitting and search suites.

#include "opsplit/datagen.hpp"
#include "opsplit/dictionary.hpp"
#include "opsplit/identify.hpp"
#include "opsplit/search.hpp"
#include "opsplit/splitting.hpp"

#include <atomic>
#include <memory>
#include <vector>

namespace opsplit::testing {

/// Identity flow that counts how often it is applied.
class CountingFlow final : public Flow {
public:
  explicit CountingFlow(std::shared_ptr<std::atomic<int>> counter) : counter_(std::move(counter)) {}
  Field advance(const Field& u, double) const override {
    ++*counter_;
    return u;
  }

private:
  std::shared_ptr<std::atomic<int>> counter_;
};

/// Flow that fails on its n-th application (1-based); identity before that.
class FailingFlow final : public Flow {
public:
  explicit FailingFlow(int fail_at = 1) : fail_at_(fail_at) {}
  Field advance(const Field& u, double) const override {
    if (++calls_ >= fail_at_) throw StabilityError("test flow blew up");
    return u;
  }

private:
  int fail_at_;
  mutable std::atomic<int> calls_{0};
};

inline OperatorEntry make_entry(int id, std::shared_ptr<const Flow> flow, PhysicsParams p = {}) {
  OperatorEntry e;
  e.id = id;
  e.flow = std::move(flow);
  e.params = p;
  e.mu = p.coeffs;
  e.provenance = "test:" + std::to_string(id);
  return e;
}

inline OperatorEntry exact_entry(int id, PhysicsKind kind, const std::string& name, double value,
                                 const Grid& g, double dt) {
  PhysicsParams p(kind, {{name, value}});
  return make_entry(id, std::make_shared<FlowOperator>(p, g, dt), p);
}

inline OperatorSubset subset_of(std::vector<OperatorEntry> entries, Scheme scheme = Scheme::Strang) {
  OperatorSubset s;
  s.entries = std::move(entries);
  s.scheme = scheme;
  return s;
}

/// Advection speeds `cs` then diffusivities `ds`, on the advdiff benchmark grid and step.
inline Dictionary advdiff_dictionary(const std::vector<double>& cs, const std::vector<double>& ds) {
  const BenchmarkPreset p = preset(Benchmark::AdvDiff);
  DictionarySpec s;
  s.grid = p.grid;
  s.dt = p.dt();
  if (!cs.empty()) s.operators.push_back({PhysicsKind::Advection1D, "c", cs, {}});
  if (!ds.empty()) s.operators.push_back({PhysicsKind::Diffusion1D, "D", ds, {}});
  return build_dictionary(s);
}

inline Trajectory advdiff_truth(double c, double D, std::uint64_t seed) {
  return generate_benchmark(Benchmark::AdvDiff, {{"c", c}, {"D", D}}, InitSpec{.seed = seed});
}

inline Context advdiff_context(double c, double D, std::uint64_t seed, std::size_t L = 16) {
  return Context::from(advdiff_truth(c, D, seed), L);
}

/// One-step defect ratio d(dt) / d(dt/2) for nonlinear advection (alpha = 1)
/// split with diffusion (D = 0.2), each defect measured against 64 Strang
/// steps of size h/64 over the same interval h.
inline double splitting_defect_ratio(Scheme scheme, double dt, std::uint64_t seed) {
  const Grid g = preset(Benchmark::Combined).grid;
  const Field u0 = init_fourier_mix(g, 5, seed);
  auto defect = [&](double h) {
    const OperatorSubset s = subset_of({exact_entry(0, PhysicsKind::NonlinAdvection1D, "alpha", 1.0, g, h),
                                        exact_entry(1, PhysicsKind::Diffusion1D, "D", 0.2, g, h)},
                                       scheme);
    OperatorSubset fine = s;
    fine.scheme = Scheme::Strang;
    Field ref = u0;
    for (int i = 0; i < 64; ++i) ref = strang_step(fine, ref, h / 64);
    return nrmse(split_step(s, u0, h), ref);
  };
  return defect(dt) / defect(dt / 2);
}

}  // namespace opsplit::testing
