#pragma once

// Operator dictionary: parametric single-physics flows indexed by their
// coefficients.
//
// DictionarySpec document (JSON):
//
//   {
//     "grid": {"dims": 1, "points": 256, "length": 16.0},
//     "dt": 0.10101,
//     "settings": {"cfl_advective": 0.4, ...},          optional
//     "operators": [
//       {"kind": "advection_1d", "coefficient": "c", "values": [0.25, 0.5]},
//       {"kind": "diffusion_kill_gs", "coefficient": "k",
//        "range": {"min": 0.051, "max": 0.070, "count": 20, "spacing": "linear"},
//        "fixed": {"D_A": 2e-5, "D_B": 1e-5}},
//       {"kind": "euler_2d"}
//     ]
//   }
//
// Each operator block yields one entry per swept value. "fixed" coefficients
// are part of the flow but not of the entry's mu, so they take no part in
// parameter identification. Kinds without coefficients yield one entry.
// "spacing" is "linear" or "log".

#include "opsplit/error.hpp"
#include "opsplit/physics.hpp"
#include "opsplit/random.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace opsplit {

struct OperatorEntry {
  int id = 0;
  std::shared_ptr<const Flow> flow;
  PhysicsParams params;  // full coefficient set the flow was built with
  CoefficientMap mu;     // identifiable coefficients (the swept block)
  std::string provenance;
};

struct Dictionary {
  std::vector<OperatorEntry> entries;
  Grid grid;
  double dt = 0.0;
  std::vector<std::string> warnings;

  std::size_t size() const { return entries.size(); }

  const OperatorEntry& by_id(int id) const {
    for (const auto& e : entries)
      if (e.id == id) return e;
    throw InvalidArgument("dictionary: no entry with id " + std::to_string(id));
  }

  /// Union of identifiable coefficient names across entries.
  std::vector<std::string> coefficient_names() const {
    std::vector<std::string> names;
    for (const auto& e : entries)
      for (const auto& [name, value] : e.mu)
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    std::sort(names.begin(), names.end());
    return names;
  }
};

struct CoefficientSweep {
  PhysicsKind kind = PhysicsKind::Advection1D;
  std::string coefficient;      // empty for kinds without coefficients
  std::vector<double> values;
  CoefficientMap fixed;
};

struct DictionarySpec {
  Grid grid;
  double dt = 0.0;  // 0 = not set
  SolverSettings settings;
  std::vector<CoefficientSweep> operators;
};

inline std::vector<double> linear_range(double lo, double hi, int count) {
  require(count >= 1, "range: count must be >= 1");
  if (count == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  v.back() = hi;
  return v;
}

inline std::vector<double> log_range(double lo, double hi, int count) {
  require(lo > 0.0 && hi > 0.0, "range: log spacing needs positive bounds");
  std::vector<double> v = linear_range(std::log10(lo), std::log10(hi), count);
  for (double& x : v) x = std::pow(10.0, x);
  v.front() = lo;
  if (count > 1) v.back() = hi;
  return v;
}

namespace detail {

inline SolverSettings settings_from_json(const nlohmann::json& j) {
  SolverSettings s;
  s.cfl_advective = j.value("cfl_advective", s.cfl_advective);
  s.cfl_euler = j.value("cfl_euler", s.cfl_euler);
  s.reaction_limit = j.value("reaction_limit", s.reaction_limit);
  s.fixed_point_tol = j.value("fixed_point_tol", s.fixed_point_tol);
  s.fixed_point_max_iter = j.value("fixed_point_max_iter", s.fixed_point_max_iter);
  s.min_substeps = j.value("min_substeps", s.min_substeps);
  return s;
}

inline std::string format_value(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace detail

/// Parses a DictionarySpec document. Schema errors raise InvalidArgument.
inline DictionarySpec parse_dictionary_spec(const nlohmann::json& doc) {
  try {
    DictionarySpec spec;
    const auto& g = doc.at("grid");
    spec.grid = Grid{g.at("dims").get<int>(), g.at("points").get<std::size_t>(), g.at("length").get<double>()};
    spec.grid.validate();
    // dt may be left out and taken from the trajectory the dictionary is used on
    if (doc.contains("dt")) {
      spec.dt = doc.at("dt").get<double>();
      require(std::isfinite(spec.dt) && spec.dt > 0.0, "dictionary spec: dt must be positive");
    }
    if (doc.contains("settings")) spec.settings = detail::settings_from_json(doc.at("settings"));
    for (const auto& op : doc.at("operators")) {
      CoefficientSweep sw;
      sw.kind = parse_kind(op.at("kind").get<std::string>());
      if (op.contains("coefficient")) sw.coefficient = canonical_name(op.at("coefficient").get<std::string>());
      if (op.contains("values")) sw.values = op.at("values").get<std::vector<double>>();
      if (op.contains("range")) {
        const auto& r = op.at("range");
        const std::string spacing = r.value("spacing", "linear");
        require(spacing == "linear" || spacing == "log", "dictionary spec: spacing must be linear or log");
        const auto more = spacing == "log"
                              ? log_range(r.at("min").get<double>(), r.at("max").get<double>(), r.at("count").get<int>())
                              : linear_range(r.at("min").get<double>(), r.at("max").get<double>(), r.at("count").get<int>());
        sw.values.insert(sw.values.end(), more.begin(), more.end());
      }
      if (op.contains("fixed"))
        for (const auto& [name, value] : op.at("fixed").items()) sw.fixed[canonical_name(name)] = value.get<double>();
      spec.operators.push_back(std::move(sw));
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("dictionary spec: ") + e.what());
  }
}

inline nlohmann::json to_json(const DictionarySpec& spec) {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& sw : spec.operators) {
    nlohmann::json o{{"kind", to_string(sw.kind)}};
    if (!sw.coefficient.empty()) {
      o["coefficient"] = sw.coefficient;
      o["values"] = sw.values;
    }
    if (!sw.fixed.empty()) o["fixed"] = sw.fixed;
    ops.push_back(std::move(o));
  }
  const auto& s = spec.settings;
  nlohmann::json doc{{"grid", {{"dims", spec.grid.dims}, {"points", spec.grid.n}, {"length", spec.grid.length}}},
                     {"settings",
                      {{"cfl_advective", s.cfl_advective},
                       {"cfl_euler", s.cfl_euler},
                       {"reaction_limit", s.reaction_limit},
                       {"fixed_point_tol", s.fixed_point_tol},
                       {"fixed_point_max_iter", s.fixed_point_max_iter},
                       {"min_substeps", s.min_substeps}}},
                     {"operators", ops}};
  if (spec.dt > 0.0) doc["dt"] = spec.dt;
  return doc;
}

/// Reads a spec file. A missing or unreadable file raises FormatError(Io).
inline DictionarySpec load_dictionary_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open dictionary spec '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("dictionary spec '" + path + "': " + e.what());
  }
  return parse_dictionary_spec(doc);
}

/// One entry per (kind, coefficient value), ordered by kind then coefficient
/// values, ids 0..N-1 in that order. Duplicates collapse with a warning.
inline Dictionary build_dictionary(const DictionarySpec& spec) {
  spec.grid.validate();
  require(std::isfinite(spec.dt) && spec.dt > 0.0, "build_dictionary: dt must be positive");
  require(!spec.operators.empty(), "build_dictionary: no operators");

  struct Pending {
    PhysicsParams params;
    CoefficientMap mu;
  };
  std::vector<Pending> pending;
  for (const auto& sw : spec.operators) {
    const auto names = coefficient_names(sw.kind);
    if (names.empty()) {
      require(sw.values.empty(), "build_dictionary: kind " + std::string(to_string(sw.kind)) + " takes no coefficients");
      pending.push_back({PhysicsParams(sw.kind, sw.fixed), {}});
      continue;
    }
    require(!sw.coefficient.empty(), "build_dictionary: kind " + std::string(to_string(sw.kind)) + " needs a coefficient");
    require(!sw.values.empty(), "build_dictionary: empty coefficient grid for " + sw.coefficient);
    require(!sw.fixed.contains(sw.coefficient), "build_dictionary: '" + sw.coefficient + "' is both swept and fixed");
    for (double v : sw.values) {
      CoefficientMap c = sw.fixed;
      c[sw.coefficient] = v;
      pending.push_back({PhysicsParams(sw.kind, c), {{sw.coefficient, v}}});
    }
  }

  std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    if (a.params.kind != b.params.kind) return a.params.kind < b.params.kind;
    if (a.mu != b.mu) return a.mu < b.mu;
    return a.params.coeffs < b.params.coeffs;
  });

  Dictionary d;
  d.grid = spec.grid;
  d.dt = spec.dt;
  for (const auto& p : pending) {
    std::string label(to_string(p.params.kind));
    for (const auto& [name, value] : p.params.coeffs) label += ":" + name + "=" + detail::format_value(value);
    if (std::any_of(d.entries.begin(), d.entries.end(), [&](const OperatorEntry& e) { return e.params == p.params; })) {
      d.warnings.push_back("duplicate operator " + label + " collapsed");
      continue;
    }
    OperatorEntry e;
    e.id = static_cast<int>(d.entries.size());
    e.flow = std::make_shared<FlowOperator>(p.params, spec.grid, spec.dt, spec.settings);
    e.params = p.params;
    e.mu = p.mu;
    e.provenance = std::move(label);
    d.entries.push_back(std::move(e));
  }
  return d;
}

/// Seeded uniform subsample without replacement; entry order and ids kept.
inline Dictionary subsample(const Dictionary& d, std::size_t n, std::uint64_t seed) {
  require(n <= d.size(), "subsample: n exceeds dictionary size");
  require(n >= 1, "subsample: n must be >= 1");
  Rng rng(seed);
  auto picks = rng.sample_without_replacement(d.size(), n);
  std::sort(picks.begin(), picks.end());
  Dictionary out;
  out.grid = d.grid;
  out.dt = d.dt;
  out.warnings = d.warnings;
  for (std::size_t i : picks) out.entries.push_back(d.entries[i]);
  return out;
}

}  // namespace opsplit
