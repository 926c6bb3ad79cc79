// opsplit: trajectory generation, composition search, rollout evaluation and
// the scaling / identification / weakest-link studies.
//
// Exit codes: 0 ok, 1 I/O, 2 usage, 3 numerical failure.

#include "opsplit/datagen.hpp"
#include "opsplit/dictionary.hpp"
#include "opsplit/experiments.hpp"
#include "opsplit/identify.hpp"
#include "opsplit/parallel.hpp"
#include "opsplit/search.hpp"
#include "opsplit/splitting.hpp"
#include "opsplit/trajectory_io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fftw3.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace opsplit;
namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr const char* kOutEnv = "OPSPLIT_OUT";

struct Options {
  std::string benchmark = "advdiff";
  std::string dict;
  std::string data;
  std::string report;
  std::string subset;
  std::vector<std::string> mu;
  int context_len = 0;  // 0 = preset
  int context_start = 0;
  int horizon = 0;  // 0 = preset
  std::string strategy = "beam";
  int trials = -1;  // negative = preset
  int beam_width = 0;
  int max_len = 0;
  double threshold = -1.0;
  std::string scheme = "strang";
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::size_t dict_size = 0;  // 0 = whole dictionary
  std::string out;
  int n = 1;
  int frames = 0;
  int runs = 5;
  std::vector<double> spacings = {0.2, 0.1, 0.05};
};

// --- small helpers ---------------------------------------------------------

CoefficientMap parse_mu(const std::vector<std::string>& items) {
  CoefficientMap mu;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string pair;
    while (std::getline(ss, pair, ';')) {
      if (pair.empty()) continue;
      const auto eq = pair.find('=');
      require(eq != std::string::npos && eq > 0, "--mu expects name=value, got '" + pair + "'");
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(pair.substr(eq + 1), &used);
      } catch (const std::exception&) {
        used = 0;
      }
      require(used > 0 && used == pair.size() - eq - 1, "--mu: bad number in '" + pair + "'");
      mu[canonical_name(pair.substr(0, eq))] = v;
    }
  }
  return mu;
}

CoefficientMap default_mu(Benchmark b) {
  switch (b) {
    case Benchmark::AdvDiff: return {{"c", 0.5}, {"D", 0.3}};
    case Benchmark::Combined: return {{"alpha", 0.5}, {"D", 0.1}, {"gamma", 0.25}};
    case Benchmark::GrayScott: return {{"F", 0.04}, {"k", 0.06}};
    case Benchmark::NavierStokes: return {{"nu", 1e-3}};
    case Benchmark::Euler: return {};
    case Benchmark::Diffusion2D: return {{"nu", 1e-3}};
  }
  return {};
}

std::vector<int> parse_ids(const std::string& text) {
  std::vector<int> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = -1;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used > 0 && used == item.size() && v >= 0, "--subset expects comma-separated ids, got '" + text + "'");
    ids.push_back(v);
  }
  require(!ids.empty(), "--subset is empty");
  return ids;
}

fs::path output_dir(const Options& o, const std::string& command) {
  fs::path dir;
  if (!o.out.empty()) {
    dir = o.out;
  } else {
    const char* root = std::getenv(kOutEnv);
    dir = fs::path(root && *root ? root : "opsplit_out") / command;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError(FormatError::Kind::Io, "cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out.flush()) throw FormatError(FormatError::Kind::Io, "cannot write '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw FormatError(FormatError::Kind::Io, "cannot rename '" + tmp.string() + "': " + ec.message());
}

json provenance(const CLI::App& sub, const std::vector<std::string>& argv) {
  json flags = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help") continue;
    const auto& res = opt->results();
    if (opt->count() == 0) flags[name] = opt->get_default_str();
    else if (res.size() == 1) flags[name] = res.front();
    else flags[name] = res;
  }
  const char* root = std::getenv(kOutEnv);
  return {{"tool", "opsplit"},
          {"version", kVersion},
          {"subcommand", sub.get_name()},
          {"flags", flags},
          {"argv", argv},
          {"fftw", std::string(fftw_version)},
          {"compiler", __VERSION__},
          {kOutEnv, root ? json(root) : json(nullptr)}};
}

void write_provenance(const fs::path& dir, const CLI::App& sub, const std::vector<std::string>& argv) {
  write_file(dir / "provenance.json", provenance(sub, argv).dump(2) + "\n");
}

std::string csv_text(const std::vector<BudgetRow>& rows) {
  std::ostringstream os;
  write_budget_csv(os, rows);
  return os.str();
}

// --- shared setup ------------------------------------------------------------

Trajectory load_truth(const Options& o, Benchmark b, std::uint64_t seed) {
  if (!o.data.empty()) return read_trajectory(o.data);
  CoefficientMap mu = default_mu(b);
  for (const auto& [k, v] : parse_mu(o.mu)) mu[k] = v;
  GenerateOptions g;
  if (o.frames > 0) g.n_frames = o.frames;
  return generate_benchmark(b, mu, InitSpec{.seed = seed}, g);
}

DictionarySpec dictionary_spec(const Options& o, Benchmark b, const Trajectory& truth) {
  DictionarySpec s;
  if (o.dict.empty()) {
    s = benchmark_dictionary_spec(b, truth.dt);
    s.grid = truth.grid();
    return s;
  }
  s = load_dictionary_spec(o.dict);
  if (s.dt == 0.0) s.dt = truth.dt;
  require(std::abs(s.dt - truth.dt) <= 1e-12 * truth.dt,
          "dictionary dt " + format_number(s.dt) + " differs from trajectory dt " + format_number(truth.dt));
  require(s.grid == truth.grid(), "dictionary grid does not match the trajectory grid");
  return s;
}

Dictionary make_dictionary(const DictionarySpec& spec, const Options& o) {
  Dictionary d = build_dictionary(spec);
  for (const auto& w : d.warnings) std::cerr << "opsplit: warning: " << w << "\n";
  if (o.dict_size > 0 && o.dict_size < d.size()) d = subsample(d, o.dict_size, o.seed);
  return d;
}

SearchConfig search_config(const Options& o, Benchmark b, Strategy strategy) {
  SearchConfig c = default_search_config(b, strategy);
  if (o.trials >= 0) c.trials = o.trials;
  if (o.beam_width > 0) c.beam_width = o.beam_width;
  if (o.max_len > 0) c.max_len = o.max_len;
  if (o.threshold >= 0.0) c.threshold = o.threshold;
  c.scheme = parse_scheme(o.scheme);
  c.seed = o.seed;
  c.workers = o.workers;
  return c;
}

int context_len(const Options& o, Benchmark b) { return o.context_len > 0 ? o.context_len : preset(b).context_len; }
int horizon(const Options& o, Benchmark b) { return o.horizon > 0 ? o.horizon : preset(b).horizon; }

Context make_context(const Options& o, Benchmark b, const Trajectory& truth) {
  require(o.context_start >= 0, "--context-start must be >= 0");
  return Context::from(truth, static_cast<std::size_t>(context_len(o, b)), static_cast<std::size_t>(o.context_start));
}

// Rebuilds the selected operators from a report written by `search`.
OperatorSubset subset_from_report(const json& doc, const Trajectory& truth) {
  try {
    SolverSettings settings;
    if (doc.contains("dictionary")) settings = parse_dictionary_spec(doc.at("dictionary")).settings;
    const auto& best = doc.at("report").at("best_subset");
    OperatorSubset s;
    s.scheme = parse_scheme(best.at("scheme").get<std::string>());
    for (const auto& e : best.at("entries")) {
      OperatorEntry entry;
      entry.id = e.at("id").get<int>();
      entry.params = PhysicsParams(parse_kind(e.at("kind").get<std::string>()), e.at("coefficients").get<CoefficientMap>());
      entry.mu = e.at("mu").get<CoefficientMap>();
      entry.provenance = e.at("provenance").get<std::string>();
      entry.flow = std::make_shared<FlowOperator>(entry.params, truth.grid(), truth.dt, settings);
      s.entries.push_back(std::move(entry));
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::CorruptHeader, std::string("search report: ") + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(FormatError::Kind::CorruptHeader, "'" + path + "': " + e.what());
  }
}

// --- subcommands -------------------------------------------------------------

int cmd_generate(const Options& o, const CLI::App& sub, const std::vector<std::string>& argv) {
  const Benchmark b = parse_benchmark(o.benchmark);
  require(o.n >= 1, "--n must be >= 1");
  CoefficientMap mu = default_mu(b);
  for (const auto& [k, v] : parse_mu(o.mu)) mu[k] = v;
  GenerateOptions g;
  if (o.frames > 0) g.n_frames = o.frames;
  const fs::path dir = output_dir(o, "generate");

  std::vector<ManifestRow> rows(static_cast<std::size_t>(o.n));
  parallel_for(rows.size(), o.workers, [&](std::size_t i) {
    const std::uint64_t seed = o.seed + i;
    const Trajectory t = generate_benchmark(b, mu, InitSpec{.seed = seed}, g);
    char name[96];
    std::snprintf(name, sizeof name, "%s_%04zu.traj", std::string(to_string(b)).c_str(), i);
    write_trajectory(t, dir / name);
    rows[i] = ManifestRow{name, std::string(to_string(b)), seed, t.size(), t.dt, t.mu};
  });

  std::ostringstream manifest;
  write_manifest(manifest, rows);
  write_file(dir / "manifest.csv", manifest.str());
  write_provenance(dir, sub, argv);
  std::cout << "wrote " << rows.size() << " trajectories to " << dir.string() << "\n";
  return 0;
}

int cmd_search(const Options& o, const CLI::App& sub, const std::vector<std::string>& argv) {
  const Benchmark b = parse_benchmark(o.benchmark);
  const Strategy strategy = parse_strategy(o.strategy);
  const SearchConfig cfg = search_config(o, b, strategy);
  const Trajectory truth = load_truth(o, b, o.seed);
  const DictionarySpec spec = dictionary_spec(o, b, truth);
  const Dictionary d = make_dictionary(spec, o);
  const Context ctx = make_context(o, b, truth);
  const fs::path dir = output_dir(o, "search");

  const SearchReport r = run_search(d, ctx, cfg);
  const ParameterEstimate est = with_truth(identify_parameters(r.best_subset, d), truth.mu);

  json doc{{"benchmark", to_string(b)},
           {"report", to_json(r)},
           {"identified", est.mu_hat},
           {"truth", truth.mu},
           {"abs_error", *est.abs_error},
           {"mae", est.mae() ? json(*est.mae()) : json(nullptr)},
           {"config",
            {{"strategy", to_string(cfg.strategy)},
             {"trials", cfg.trials},
             {"beam_width", cfg.beam_width},
             {"max_len", cfg.max_len},
             {"threshold", cfg.threshold},
             {"scheme", to_string(cfg.scheme)},
             {"seed", cfg.seed},
             {"workers", cfg.workers}}},
           {"context", {{"length", ctx.frames.size()}, {"start", o.context_start}, {"dt", ctx.dt}}},
           {"dictionary", to_json(spec)},
           {"dictionary_size", d.size()},
           {"data", o.data.empty() ? json("generated") : json(o.data)},
           {"seed", o.seed}};
  write_file(dir / "report.json", doc.dump(2) + "\n");
  write_file(dir / ("budget_" + std::string(to_string(strategy)) + ".csv"), csv_text(budget_curve(r)));
  write_provenance(dir, sub, argv);

  std::cout << to_string(strategy) << " search: " << r.evaluations << " evaluations, best loss "
            << format_number(r.best_loss) << ", subset";
  for (const auto& e : r.best_subset.entries) std::cout << " [" << e.id << " " << e.provenance << "]";
  std::cout << "\nidentified " << format_coefficients(est.mu_hat) << "\n";
  return std::isfinite(r.best_loss) ? 0 : 3;
}

int cmd_rollout(const Options& o, const CLI::App& sub, const std::vector<std::string>& argv) {
  const Benchmark b = parse_benchmark(o.benchmark);
  require(o.report.empty() != o.subset.empty(), "rollout needs exactly one of --report or --subset");
  const Trajectory truth = load_truth(o, b, o.seed);
  const int L = context_len(o, b), H = horizon(o, b);

  OperatorSubset s;
  json report;
  if (!o.report.empty()) {
    report = read_json_file(o.report);
    s = subset_from_report(report, truth);
    if (sub.count("--scheme")) s.scheme = parse_scheme(o.scheme);
  } else {
    const Dictionary d = make_dictionary(dictionary_spec(o, b, truth), o);
    s = make_subset(d, parse_ids(o.subset), parse_scheme(o.scheme));
  }
  const fs::path dir = output_dir(o, "rollout");

  const RolloutEvaluation ev = evaluate_rollout(s, truth, L, H);
  std::ostringstream csv;
  csv << "step,nrmse\n";
  csv.precision(17);
  for (std::size_t i = 0; i < ev.per_step.size(); ++i) csv << i + 1 << ',' << ev.per_step[i] << '\n';
  write_file(dir / "rollout.csv", csv.str());

  if (!ev.predicted.empty()) {
    Trajectory pred;
    pred.frames.push_back(truth.frames[static_cast<std::size_t>(L - 1)]);
    pred.frames.insert(pred.frames.end(), ev.predicted.begin(), ev.predicted.end());
    pred.dt = truth.dt;
    pred.mu = identify_parameters(s).mu_hat;
    pred.seed = truth.seed;
    pred.generator = "rollout";
    pred.solver_settings = {{"scheme", std::string(to_string(s.scheme))}};
    write_trajectory(pred, dir / "predicted.traj");
  }

  if (!report.is_null()) {
    std::ostringstream eval;
    write_eval_header(eval);
    const auto& r = report.at("report");
    write_eval_row(eval, EvalRow{std::string(to_string(b)), truth.mu, parse_strategy(r.at("strategy").get<std::string>()),
                                 ev.nrmse, r.at("evaluations").get<long>(), identify_parameters(s).mu_hat});
    write_file(dir / "eval.csv", eval.str());
  }
  write_provenance(dir, sub, argv);

  if (ev.failed_step) {
    std::cerr << "opsplit: rollout blew up at step " << *ev.failed_step;
    if (ev.failed_operator) std::cerr << " in operator " << *ev.failed_operator;
    std::cerr << "; partial results in " << dir.string() << "\n";
    return 3;
  }
  std::cout << "rollout over " << H << " steps: nrmse " << format_number(ev.nrmse) << "\n";
  return 0;
}

int cmd_scaling(const Options& o, const CLI::App& sub, const std::vector<std::string>& argv) {
  const Benchmark b = parse_benchmark(o.benchmark);
  require(o.runs >= 1, "--runs must be >= 1");
  const fs::path dir = output_dir(o, "scaling");
  std::ostringstream summary;
  summary << "run,seed,budget_applications,budget_flops,uniform_best_loss,beam_best_loss,beam_not_worse\n";
  summary.precision(17);
  int wins = 0;
  for (int run = 0; run < o.runs; ++run) {
    const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(run);
    const Trajectory truth = load_truth(o, b, seed);
    const Dictionary d = make_dictionary(dictionary_spec(o, b, truth), o);
    const Context ctx = make_context(o, b, truth);
    SearchConfig u = search_config(o, b, Strategy::Uniform), bc = search_config(o, b, Strategy::Beam);
    u.seed = bc.seed = seed;
    const ScalingResult r = compare_strategies(d, ctx, u, bc);
    const std::string tag = std::to_string(run);
    write_file(dir / ("budget_uniform_" + tag + ".csv"), csv_text(budget_curve(r.uniform)));
    write_file(dir / ("budget_beam_" + tag + ".csv"), csv_text(budget_curve(r.beam)));
    summary << run << ',' << seed << ',' << r.budget << ','
            << flops_per_application(r.beam.grid_points) * static_cast<double>(r.budget) << ','
            << r.uniform_at_budget << ',' << r.beam_at_budget << ',' << (r.beam_not_worse() ? 1 : 0) << '\n';
    wins += r.beam_not_worse();
  }
  write_file(dir / "scaling.csv", summary.str());
  write_provenance(dir, sub, argv);
  std::cout << "beam at or below uniform at its level-1 budget in " << wins << "/" << o.runs << " runs\n";
  return 0;
}

int cmd_identify(const Options& o, const CLI::App& sub, const std::vector<std::string>& argv) {
  const Benchmark b = parse_benchmark(o.benchmark);
  require(b == Benchmark::AdvDiff, "identify sweeps the advection-diffusion dictionary grid; use --benchmark advdiff");
  require(!o.spacings.empty(), "--spacings is empty");
  const Strategy strategy = parse_strategy(o.strategy);
  const SearchConfig cfg = search_config(o, b, strategy);
  const Trajectory truth = load_truth(o, b, o.seed);
  const Context ctx = make_context(o, b, truth);
  const fs::path dir = output_dir(o, "identify");

  std::ostringstream csv;
  csv << "spacing,dictionary_size,best_loss,mae,identified_params\n";
  csv.precision(17);
  for (double spacing : o.spacings) {
    const Dictionary d = build_dictionary(advdiff_dictionary_spec(spacing, truth.dt, truth.grid()));
    const SearchReport r = run_search(d, ctx, cfg);
    const ParameterEstimate est = with_truth(identify_parameters(r.best_subset, d), truth.mu);
    csv << format_number(spacing) << ',' << d.size() << ',' << r.best_loss << ',' << est.mae().value_or(kLossSentinel) << ','
        << format_coefficients(est.mu_hat) << '\n';
    std::cout << "spacing " << spacing << ": identified " << format_coefficients(est.mu_hat) << ", mae "
              << format_number(est.mae().value_or(kLossSentinel)) << "\n";
  }
  write_file(dir / "identify.csv", csv.str());
  write_provenance(dir, sub, argv);
  return 0;
}

int cmd_weakest_link(const Options& o, const CLI::App& sub, const std::vector<std::string>& argv) {
  WeakestLinkConfig cfg;
  cfg.seed = o.seed;
  const auto rows = weakest_link_study(cfg);
  const fs::path dir = output_dir(o, "weakest-link");
  std::ostringstream csv;
  write_weakest_link_csv(csv, rows);
  write_file(dir / "weakest_link.csv", csv.str());
  write_provenance(dir, sub, argv);
  std::cout << csv.str();
  return 0;
}

// --- flag wiring -------------------------------------------------------------

void add_data_flags(CLI::App* s, Options& o) {
  s->add_option("--benchmark", o.benchmark, "advdiff, combined, grayscott, navier_stokes (ns), euler, diffusion_2d");
  s->add_option("--data", o.data, "trajectory file; generated from --seed and --mu when omitted");
  s->add_option("--mu", o.mu, "ground-truth coefficients, name=value (repeatable, ',' or ';' separated)")
      ->delimiter(',');
  s->add_option("--frames", o.frames, "frames per generated trajectory (default: preset)");
  s->add_option("--seed", o.seed, "random seed");
  s->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  s->add_option("--out", o.out, std::string("output directory (default: $") + kOutEnv + "/<command>)");
}

void add_search_flags(CLI::App* s, Options& o) {
  s->add_option("--dict", o.dict, "dictionary spec JSON (default: benchmark dictionary)");
  s->add_option("--dict-size", o.dict_size, "seeded subsample of the dictionary");
  s->add_option("--context-len", o.context_len, "context length L (default: preset)");
  s->add_option("--context-start", o.context_start, "first context frame");
  s->add_option("--strategy", o.strategy, "uniform or beam")->check(CLI::IsMember({"uniform", "beam"}));
  s->add_option("--trials", o.trials, "uniform-search trials T (default: preset)");
  s->add_option("--beam-width", o.beam_width, "beam width B (default: preset)");
  s->add_option("--max-len", o.max_len, "maximum subset length M (default: preset)");
  s->add_option("--threshold", o.threshold, "relative-improvement stop threshold (default: preset)");
  s->add_option("--scheme", o.scheme, "lie or strang")->check(CLI::IsMember({"lie", "strang"}));
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Test-time operator-splitting composition search for PDE dynamics", "opsplit"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "generate benchmark trajectories and a manifest");
  add_data_flags(gen, o);
  gen->add_option("--n", o.n, "number of trajectories (seeds seed..seed+n-1)");

  auto* search = app.add_subcommand("search", "search the dictionary for the best operator composition");
  add_data_flags(search, o);
  add_search_flags(search, o);

  auto* roll = app.add_subcommand("rollout", "roll a composition out after the context and score it");
  add_data_flags(roll, o);
  add_search_flags(roll, o);
  roll->add_option("--report", o.report, "report.json from search");
  roll->add_option("--subset", o.subset, "comma-separated dictionary ids");
  roll->add_option("--horizon", o.horizon, "rollout horizon H (default: preset)");

  auto* scaling = app.add_subcommand("scaling", "budget curves of uniform and beam search");
  add_data_flags(scaling, o);
  add_search_flags(scaling, o);
  scaling->add_option("--runs", o.runs, "seeded runs (seeds seed..seed+runs-1)");

  auto* ident = app.add_subcommand("identify", "identification error versus dictionary grid spacing");
  add_data_flags(ident, o);
  add_search_flags(ident, o);
  ident->add_option("--spacings", o.spacings, "coefficient grid spacings")->delimiter(',');

  auto* weak = app.add_subcommand("weakest-link", "composed versus individual operator error");
  weak->add_option("--seed", o.seed, "random seed");
  weak->add_option("--out", o.out, std::string("output directory (default: $") + kOutEnv + "/weakest-link)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const std::vector<std::string> args(argv, argv + argc);
  try {
    if (gen->parsed()) return cmd_generate(o, *gen, args);
    if (search->parsed()) return cmd_search(o, *search, args);
    if (roll->parsed()) return cmd_rollout(o, *roll, args);
    if (scaling->parsed()) return cmd_scaling(o, *scaling, args);
    if (ident->parsed()) return cmd_identify(o, *ident, args);
    if (weak->parsed()) return cmd_weakest_link(o, *weak, args);
  } catch (const FormatError& e) {
    std::cerr << "opsplit: I/O error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "opsplit: " << e.what() << "\n";
    return 2;
  } catch (const StabilityError& e) {
    std::cerr << "opsplit: numerical failure: " << e.what();
    if (e.operator_id()) std::cerr << " (operator " << *e.operator_id() << ")";
    std::cerr << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "opsplit: I/O error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "opsplit: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
