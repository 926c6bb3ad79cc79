#pragma once

// Lie and Strang composition of dictionary flows, and autoregressive rollout.
//
// For S = (f1, ..., fm):
//   Lie     fm^dt o ... o f1^dt                                   m applications
//   Strang  f1^dt/2 o ... o f(m-1)^dt/2 o fm^dt o f(m-1)^dt/2 o ... o f1^dt/2
//                                                                 2m-1 applications
// Subset order is the order the search selected the entries in.

#include "opsplit/dictionary.hpp"
#include "opsplit/error.hpp"
#include "opsplit/field.hpp"
#include "opsplit/trajectory.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace opsplit {

enum class Scheme { Lie, Strang };

inline std::string_view to_string(Scheme s) { return s == Scheme::Lie ? "lie" : "strang"; }

inline Scheme parse_scheme(std::string_view name) {
  if (name == "lie") return Scheme::Lie;
  if (name == "strang") return Scheme::Strang;
  throw InvalidArgument("unknown splitting scheme '" + std::string(name) + "'");
}

struct OperatorSubset {
  std::vector<OperatorEntry> entries;
  Scheme scheme = Scheme::Strang;

  std::size_t size() const { return entries.size(); }

  std::vector<int> ids() const {
    std::vector<int> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.id);
    return out;
  }

  void validate() const {
    require(!entries.empty(), "operator subset: empty");
    auto v = ids();
    std::sort(v.begin(), v.end());
    require(std::adjacent_find(v.begin(), v.end()) == v.end(), "operator subset: repeated entry id");
    for (const auto& e : entries) require(e.flow != nullptr, "operator subset: entry without a flow");
  }
};

inline OperatorSubset make_subset(const Dictionary& d, const std::vector<int>& ids, Scheme scheme = Scheme::Strang) {
  OperatorSubset s;
  s.scheme = scheme;
  for (int id : ids) s.entries.push_back(d.by_id(id));
  s.validate();
  return s;
}

/// Same entries reordered by ascending id.
inline OperatorSubset sorted_by_id(OperatorSubset s) {
  std::stable_sort(s.entries.begin(), s.entries.end(),
                   [](const OperatorEntry& a, const OperatorEntry& b) { return a.id < b.id; });
  return s;
}

inline long applications_per_step(std::size_t m, Scheme scheme) {
  return scheme == Scheme::Lie ? static_cast<long>(m) : 2 * static_cast<long>(m) - 1;
}

namespace detail {

inline Field apply_entry(const OperatorEntry& e, const Field& u, double t) {
  try {
    return e.flow->advance(u, t);
  } catch (const StabilityError& err) {
    throw StabilityError(err.what(), e.id);
  }
}

}  // namespace detail

inline Field lie_step(const OperatorSubset& s, const Field& u, double dt) {
  s.validate();
  Field v = u;
  for (const auto& e : s.entries) v = detail::apply_entry(e, v, dt);
  return v;
}

inline Field strang_step(const OperatorSubset& s, const Field& u, double dt) {
  s.validate();
  const std::size_t m = s.entries.size();
  Field v = u;
  for (std::size_t i = 0; i + 1 < m; ++i) v = detail::apply_entry(s.entries[i], v, 0.5 * dt);
  v = detail::apply_entry(s.entries[m - 1], v, dt);
  for (std::size_t i = m - 1; i-- > 0;) v = detail::apply_entry(s.entries[i], v, 0.5 * dt);
  return v;
}

inline Field split_step(const OperatorSubset& s, const Field& u, double dt) {
  return s.scheme == Scheme::Lie ? lie_step(s, u, dt) : strang_step(s, u, dt);
}

struct RolloutResult {
  Trajectory trajectory;             // u0 followed by every completed step
  std::optional<int> failed_step;    // 1-based step that blew up
  std::optional<int> failed_operator;
  std::string failure;

  bool ok() const { return !failed_step.has_value(); }
};

inline RolloutResult rollout(const OperatorSubset& s, const Field& u0, double dt, int steps) {
  require(steps >= 1, "rollout: steps must be >= 1");
  require(std::isfinite(dt) && dt > 0.0, "rollout: dt must be positive");
  s.validate();
  RolloutResult r;
  r.trajectory.dt = dt;
  r.trajectory.generator = "rollout";
  r.trajectory.frames.push_back(u0);
  for (int t = 1; t <= steps; ++t) {
    try {
      Field next = split_step(s, r.trajectory.frames.back(), dt);
      if (!next.finite()) throw StabilityError("rollout: non-finite state");
      r.trajectory.frames.push_back(std::move(next));
    } catch (const StabilityError& e) {
      r.failed_step = t;
      r.failed_operator = e.operator_id();
      r.failure = e.what();
      break;
    }
  }
  return r;
}

}  // namespace opsplit
