#pragma once

// NRMSE, zero-shot parameter identification and rollout evaluation.

#include "opsplit/dictionary.hpp"
#include "opsplit/error.hpp"
#include "opsplit/field.hpp"
#include "opsplit/splitting.hpp"
#include "opsplit/trajectory.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace opsplit {

/// Loss value for subsets whose prediction blew up; orders after every finite loss.
inline constexpr double kLossSentinel = std::numeric_limits<double>::infinity();

/// ||pred - truth||_2 / ||truth||_2 over all values.
inline double nrmse(const Field& pred, const Field& truth) {
  require(pred.same_shape(truth), "nrmse: shape mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = pred[i] - truth[i];
    num += e * e;
    den += truth[i] * truth[i];
  }
  require(den > 0.0, "nrmse: truth is identically zero");
  return std::sqrt(num / den);
}

/// Block NRMSE over space and time.
inline double nrmse(const std::vector<Field>& pred, const std::vector<Field>& truth) {
  require(pred.size() == truth.size() && !truth.empty(), "nrmse: frame count mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    require(pred[t].same_shape(truth[t]), "nrmse: shape mismatch");
    for (std::size_t i = 0; i < truth[t].size(); ++i) {
      const double e = pred[t][i] - truth[t][i];
      num += e * e;
      den += truth[t][i] * truth[t][i];
    }
  }
  require(den > 0.0, "nrmse: truth is identically zero");
  return std::sqrt(num / den);
}

struct ParameterEstimate {
  CoefficientMap mu_hat;
  std::optional<CoefficientMap> abs_error;  // per coefficient, when truth is known

  std::optional<double> mae() const {
    if (!abs_error || abs_error->empty()) return std::nullopt;
    double s = 0.0;
    for (const auto& [name, e] : *abs_error) s += e;
    return s / static_cast<double>(abs_error->size());
  }
};

/// Sums each entry's mu per canonical name. Names listed in `names` but
/// absent from every entry are reported as 0.
inline ParameterEstimate identify_parameters(const OperatorSubset& s, const std::vector<std::string>& names = {}) {
  require(!s.entries.empty(), "identify_parameters: empty subset");
  ParameterEstimate est;
  for (const auto& n : names) est.mu_hat[canonical_name(n)] = 0.0;
  for (const auto& e : s.entries)
    for (const auto& [name, value] : e.mu) est.mu_hat[name] += value;
  return est;
}

inline ParameterEstimate identify_parameters(const OperatorSubset& s, const Dictionary& d) {
  return identify_parameters(s, d.coefficient_names());
}

/// Attaches absolute errors for every coefficient in mu_hat; missing truth
/// values count as 0.
inline ParameterEstimate with_truth(ParameterEstimate est, const CoefficientMap& truth) {
  CoefficientMap err;
  for (const auto& [name, value] : est.mu_hat) {
    auto it = truth.find(name);
    err[name] = std::abs(value - (it == truth.end() ? 0.0 : it->second));
  }
  est.abs_error = std::move(err);
  return est;
}

struct RolloutEvaluation {
  double nrmse = kLossSentinel;
  std::vector<double> per_step;  // one value per completed step
  std::optional<int> failed_step;
  std::optional<int> failed_operator;
  std::vector<Field> predicted;  // frames L+1 .. L+H (partial on failure)
};

/// Rolls S out from context frame L (1-based) for H steps and compares with
/// truth frames L+1..L+H. Default metric: mean of per-step NRMSE; `block`
/// switches to one norm over the whole space-time block.
inline RolloutEvaluation evaluate_rollout(const OperatorSubset& s, const Trajectory& truth, int L, int H,
                                          bool block = false) {
  require(L >= 1, "evaluate_rollout: L must be >= 1");
  require(H >= 1, "evaluate_rollout: H must be >= 1");
  require(truth.size() >= static_cast<std::size_t>(L + H), "evaluate_rollout: truth shorter than L + H frames");
  const auto r = rollout(s, truth.frames[static_cast<std::size_t>(L - 1)], truth.dt, H);
  RolloutEvaluation ev;
  ev.predicted.assign(r.trajectory.frames.begin() + 1, r.trajectory.frames.end());
  std::vector<Field> target;
  for (std::size_t i = 0; i < ev.predicted.size(); ++i) {
    const Field& y = truth.frames[static_cast<std::size_t>(L) + i];
    ev.per_step.push_back(nrmse(ev.predicted[i], y));
    target.push_back(y);
  }
  if (!r.ok()) {
    ev.failed_step = r.failed_step;
    ev.failed_operator = r.failed_operator;
    ev.nrmse = kLossSentinel;
    return ev;
  }
  if (block) {
    ev.nrmse = nrmse(ev.predicted, target);
  } else {
    double sum = 0.0;
    for (double v : ev.per_step) sum += v;
    ev.nrmse = sum / static_cast<double>(ev.per_step.size());
  }
  return ev;
}

}  // namespace opsplit
