#pragma once

// Test-time search over operator subsets.
//
// fitting_loss   teacher-forced one-step NRMSE averaged over the L-1 context
//                transitions, evaluated under the subset's splitting scheme.
// uniform_search best singleton, then T random subsets (length ~ U{1..M},
//                members drawn without replacement).
// beam_search    level 0 = top-B singletons; level m+1 = top-B of every beam
//                member extended by one unused entry. Stops when the best loss
//                of a level improves on the previous level's best by less than
//                the threshold (relative), or after subsets of length M.
//                Returns the best subset seen on any level.
//
// Ranking is by (loss, ordered id tuple); sentinel losses sort last.
// Candidates of one batch are evaluated concurrently into fixed slots and
// folded in order, so reports do not depend on the worker count.
//
// Cost is counted in flow applications: (L-1) * (m for Lie, 2m-1 for Strang)
// per evaluated subset.

#include "opsplit/dictionary.hpp"
#include "opsplit/error.hpp"
#include "opsplit/identify.hpp"
#include "opsplit/parallel.hpp"
#include "opsplit/random.hpp"
#include "opsplit/splitting.hpp"
#include "opsplit/trajectory.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace opsplit {

struct Context {
  std::vector<Field> frames;
  double dt = 0.0;

  void validate() const {
    require(frames.size() >= 2, "context: needs at least two frames");
    require(std::isfinite(dt) && dt > 0.0, "context: dt must be positive");
    for (const auto& f : frames) require(f.same_shape(frames.front()), "context: frames differ in shape");
  }

  /// Frames [start, start + L) of a trajectory.
  static Context from(const Trajectory& t, std::size_t L, std::size_t start = 0) {
    require(start + L <= t.size(), "context: trajectory shorter than requested window");
    Context c;
    c.frames.assign(t.frames.begin() + static_cast<std::ptrdiff_t>(start),
                    t.frames.begin() + static_cast<std::ptrdiff_t>(start + L));
    c.dt = t.dt;
    c.validate();
    return c;
  }
};

enum class Strategy { Uniform, Beam };

inline std::string_view to_string(Strategy s) { return s == Strategy::Uniform ? "uniform" : "beam"; }

inline Strategy parse_strategy(std::string_view name) {
  if (name == "uniform") return Strategy::Uniform;
  if (name == "beam") return Strategy::Beam;
  throw InvalidArgument("unknown search strategy '" + std::string(name) + "'");
}

struct SearchConfig {
  Strategy strategy = Strategy::Beam;
  int trials = 100;
  int beam_width = 4;
  int max_len = 5;
  double threshold = 0.05;
  Scheme scheme = Scheme::Strang;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool sort_by_id = false;

  void validate() const {
    require(trials >= 0, "search config: trials must be >= 0");
    require(beam_width >= 1, "search config: beam width must be >= 1");
    require(max_len >= 1, "search config: max length must be >= 1");
    require(threshold >= 0.0 && threshold < 1.0, "search config: threshold must be in [0, 1)");
  }
};

struct HistoryPoint {
  long long applications = 0;
  double best_loss = kLossSentinel;
};

struct SearchReport {
  Strategy strategy = Strategy::Beam;
  OperatorSubset best_subset;
  double best_loss = kLossSentinel;
  std::vector<HistoryPoint> history;  // one point per evaluated subset
  long evaluations = 0;
  std::vector<double> level_best;     // beam: best loss per level
  long long level1_applications = 0;  // beam: cost when the pairs level finished; 0 for uniform
  std::size_t grid_points = 0;
};

inline double fitting_loss(const OperatorSubset& s, const Context& ctx) {
  ctx.validate();
  require(!s.entries.empty(), "fitting_loss: empty subset");
  double sum = 0.0;
  for (std::size_t t = 0; t + 1 < ctx.frames.size(); ++t) {
    try {
      const Field pred = split_step(s, ctx.frames[t], ctx.dt);
      if (!pred.finite()) return kLossSentinel;
      sum += nrmse(pred, ctx.frames[t + 1]);
    } catch (const StabilityError&) {
      return kLossSentinel;
    }
  }
  const double loss = sum / static_cast<double>(ctx.frames.size() - 1);
  return std::isfinite(loss) ? loss : kLossSentinel;
}

namespace detail {

struct Scored {
  std::vector<int> ids;  // dictionary indices, in subset order
  double loss = kLossSentinel;
};

inline bool ranks_before(const Scored& a, const Scored& b) {
  if (a.loss != b.loss) return a.loss < b.loss;
  return a.ids < b.ids;
}

class Evaluator {
public:
  Evaluator(const Dictionary& d, const Context& ctx, const SearchConfig& cfg, SearchReport& report)
      : d_(d), ctx_(ctx), cfg_(cfg), report_(report) {}

  OperatorSubset subset(const std::vector<int>& idx) const {
    OperatorSubset s;
    s.scheme = cfg_.scheme;
    for (int i : idx) s.entries.push_back(d_.entries[static_cast<std::size_t>(i)]);
    return cfg_.sort_by_id ? sorted_by_id(std::move(s)) : s;
  }

  /// Evaluates a batch and folds it into the report in batch order.
  std::vector<Scored> run(const std::vector<std::vector<int>>& batch) {
    std::vector<Scored> out(batch.size());
    parallel_for(batch.size(), cfg_.workers, [&](std::size_t i) {
      out[i].ids = batch[i];
      out[i].loss = fitting_loss(subset(batch[i]), ctx_);
    });
    const long long steps = static_cast<long long>(ctx_.frames.size() - 1);
    for (const auto& sc : out) {
      applications_ += steps * applications_per_step(sc.ids.size(), cfg_.scheme);
      ++report_.evaluations;
      if (!have_best_ || ranks_before(sc, best_)) {
        best_ = sc;
        have_best_ = true;
      }
      report_.history.push_back({applications_, best_.loss});
    }
    return out;
  }

  long long applications() const { return applications_; }

  void finish() {
    report_.best_loss = best_.loss;
    report_.best_subset = subset(best_.ids);
  }

private:
  const Dictionary& d_;
  const Context& ctx_;
  const SearchConfig& cfg_;
  SearchReport& report_;
  Scored best_;
  bool have_best_ = false;
  long long applications_ = 0;
};

inline void check_inputs(const Dictionary& d, const Context& ctx, const SearchConfig& cfg) {
  cfg.validate();
  ctx.validate();
  require(d.size() >= 1, "search: empty dictionary");
  require(ctx.frames.front().grid() == d.grid, "search: context grid does not match dictionary grid");
}

inline std::vector<std::vector<int>> singletons(const Dictionary& d) {
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < d.size(); ++i) out.push_back({static_cast<int>(i)});
  return out;
}

}  // namespace detail

inline SearchReport uniform_search(const Dictionary& d, const Context& ctx, const SearchConfig& cfg) {
  detail::check_inputs(d, ctx, cfg);
  require(cfg.strategy == Strategy::Uniform, "uniform_search: config strategy is not uniform");
  require(static_cast<std::size_t>(cfg.max_len) <= d.size(), "uniform_search: max length exceeds dictionary size");

  SearchReport report;
  report.strategy = Strategy::Uniform;
  report.grid_points = d.grid.points();
  detail::Evaluator ev(d, ctx, cfg, report);
  ev.run(detail::singletons(d));

  Rng rng(cfg.seed);
  std::vector<std::vector<int>> trials;
  for (int t = 0; t < cfg.trials; ++t) {
    const std::size_t m = 1 + rng.index(static_cast<std::size_t>(cfg.max_len));
    std::vector<int> ids;
    for (std::size_t i : rng.sample_without_replacement(d.size(), m)) ids.push_back(static_cast<int>(i));
    trials.push_back(std::move(ids));
  }
  ev.run(trials);
  ev.finish();
  return report;
}

inline SearchReport beam_search(const Dictionary& d, const Context& ctx, const SearchConfig& cfg) {
  detail::check_inputs(d, ctx, cfg);
  require(cfg.strategy == Strategy::Beam, "beam_search: config strategy is not beam");

  SearchReport report;
  report.strategy = Strategy::Beam;
  report.grid_points = d.grid.points();
  detail::Evaluator ev(d, ctx, cfg, report);
  const std::size_t width = static_cast<std::size_t>(cfg.beam_width);

  auto top = [&](std::vector<detail::Scored> level) {
    std::stable_sort(level.begin(), level.end(), detail::ranks_before);
    if (level.size() > width) level.resize(width);
    return level;
  };

  std::vector<detail::Scored> beam = top(ev.run(detail::singletons(d)));
  double prev_best = beam.front().loss;
  report.level_best.push_back(prev_best);
  report.level1_applications = ev.applications();

  for (int level = 1; level < cfg.max_len; ++level) {
    std::vector<std::vector<int>> batch;
    std::set<std::vector<int>> seen;
    for (const auto& member : beam) {
      for (std::size_t j = 0; j < d.size(); ++j) {
        const int jj = static_cast<int>(j);
        if (std::find(member.ids.begin(), member.ids.end(), jj) != member.ids.end()) continue;
        std::vector<int> cand = member.ids;
        cand.push_back(jj);
        std::vector<int> key = cand;
        std::sort(key.begin(), key.end());
        if (!seen.insert(key).second) continue;
        batch.push_back(std::move(cand));
      }
    }
    if (batch.empty()) break;
    beam = top(ev.run(batch));
    const double level_best = beam.front().loss;
    report.level_best.push_back(level_best);
    if (level == 1) report.level1_applications = ev.applications();

    // relative improvement of this level over the previous one
    bool stop;
    if (prev_best == 0.0) stop = true;
    else if (!std::isfinite(prev_best)) stop = false;
    else stop = (prev_best - level_best) / prev_best < cfg.threshold;
    prev_best = level_best;
    if (stop) break;
  }
  ev.finish();
  return report;
}

inline SearchReport run_search(const Dictionary& d, const Context& ctx, const SearchConfig& cfg) {
  return cfg.strategy == Strategy::Uniform ? uniform_search(d, ctx, cfg) : beam_search(d, ctx, cfg);
}

/// Best-so-far loss after at most `applications` flow applications
/// (sentinel before the first evaluation completes).
inline double best_loss_at(const SearchReport& r, long long applications) {
  double best = kLossSentinel;
  for (const auto& h : r.history) {
    if (h.applications > applications) break;
    best = h.best_loss;
  }
  return best;
}

struct BudgetRow {
  double flops = 0.0;
  long long applications = 0;
  double best_loss = kLossSentinel;
};

/// Approximate floating-point work of one flow application on P points.
inline double flops_per_application(std::size_t points) {
  const double p = static_cast<double>(points);
  return 5.0 * p * std::log2(std::max(p, 2.0));
}

inline std::vector<BudgetRow> budget_curve(const SearchReport& r) {
  std::vector<BudgetRow> rows;
  const double per = flops_per_application(r.grid_points);
  for (const auto& h : r.history)
    rows.push_back({per * static_cast<double>(h.applications), h.applications, h.best_loss});
  return rows;
}

inline void write_budget_csv(std::ostream& os, const std::vector<BudgetRow>& rows) {
  os << "flops,applications,best_loss\n";
  os.precision(17);
  for (const auto& r : rows) os << r.flops << ',' << r.applications << ',' << r.best_loss << '\n';
}

inline nlohmann::json to_json(const OperatorSubset& s) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : s.entries)
    entries.push_back({{"id", e.id},
                       {"kind", to_string(e.params.kind)},
                       {"coefficients", e.params.coeffs},
                       {"mu", e.mu},
                       {"provenance", e.provenance}});
  return {{"scheme", to_string(s.scheme)}, {"ids", s.ids()}, {"entries", entries}};
}

/// Report document. Sentinel losses serialize as null.
inline nlohmann::json to_json(const SearchReport& r) {
  auto loss = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : r.history) hist.push_back({h.applications, loss(h.best_loss)});
  nlohmann::json levels = nlohmann::json::array();
  for (double v : r.level_best) levels.push_back(loss(v));
  return {{"strategy", to_string(r.strategy)},
          {"best_subset", to_json(r.best_subset)},
          {"best_loss", loss(r.best_loss)},
          {"evaluations", r.evaluations},
          {"level_best", levels},
          {"level1_applications", r.level1_applications},
          {"grid_points", r.grid_points},
          {"history", hist}};
}

}  // namespace opsplit
