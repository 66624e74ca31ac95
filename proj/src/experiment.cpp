#include "geosic/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "geosic/error.hpp"
#include "geosic/svg_plot.hpp"

namespace geosic {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- JSON helpers -------------------------------------------------------

double number_or(const json& doc, const char* name, double fallback) {
  if (!doc.contains(name)) return fallback;
  const auto& v = doc.at(name);
  if (!v.is_number()) {
    fail(ErrorKind::parse, std::string("field '") + name + "' must be a number");
  }
  return v.get<double>();
}

std::size_t count_or(const json& doc, const char* name, std::size_t fallback) {
  if (!doc.contains(name)) return fallback;
  const auto& v = doc.at(name);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    fail(ErrorKind::parse,
         std::string("field '") + name + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::vector<std::size_t> count_list(const json& doc, const char* name) {
  if (!doc.contains(name) || !doc.at(name).is_array()) {
    fail(ErrorKind::parse, std::string("field '") + name + "' must be an array");
  }
  std::vector<std::size_t> out;
  for (const auto& v : doc.at(name)) {
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      fail(ErrorKind::parse,
           std::string("field '") + name + "' must hold positive integers");
    }
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

std::string string_or(const json& doc, const char* name, const std::string& fallback) {
  if (!doc.contains(name)) return fallback;
  const auto& v = doc.at(name);
  if (!v.is_string()) {
    fail(ErrorKind::parse, std::string("field '") + name + "' must be a string");
  }
  return v.get<std::string>();
}

std::vector<Algorithm> algorithm_list(const json& doc, std::vector<Algorithm> fallback) {
  if (!doc.contains("algorithms")) return fallback;
  const auto& v = doc.at("algorithms");
  if (!v.is_array()) fail(ErrorKind::parse, "field 'algorithms' must be an array");
  std::vector<Algorithm> out;
  for (const auto& a : v) {
    if (!a.is_string()) fail(ErrorKind::parse, "algorithm names must be strings");
    out.push_back(parse_algorithm(a.get<std::string>()));
  }
  return out;
}

BudgetPoint budget_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorKind::parse, "budget entries must be objects");
  BudgetPoint b;
  b.population = count_or(doc, "M", b.population);
  b.iterations = count_or(doc, "I", b.iterations);
  b.temperature =
      number_or(doc, "T", static_cast<double>(b.population * b.iterations));
  return b;
}

json budget_to_json(const BudgetPoint& b) {
  return {{"M", b.population}, {"I", b.iterations}, {"T", b.temperature}};
}

std::optional<HeuristicMode> heuristic_field(const json& doc) {
  const std::string name = string_or(doc, "heuristic", "auto");
  if (name == "auto") return std::nullopt;
  return parse_heuristic_mode(name);
}

UndecodedPolicy scenario_field(const json& doc, UndecodedPolicy fallback) {
  if (!doc.contains("scenario")) return fallback;
  const auto& v = doc.at("scenario");
  if (!v.is_number_integer()) fail(ErrorKind::parse, "field 'scenario' must be 1 or 2");
  return parse_scenario(v.get<int>());
}

void apply_overrides(const json& doc, AcoParams& aco, PsoParams& pso) {
  if (doc.contains("aco")) {
    const auto& a = doc.at("aco");
    aco.alpha = number_or(a, "alpha", aco.alpha);
    aco.beta = number_or(a, "beta", aco.beta);
    aco.evaporation = number_or(a, "evaporation", aco.evaporation);
    aco.tau_max = number_or(a, "tau_max", aco.tau_max);
    aco.tau_min = number_or(a, "tau_min", aco.tau_min);
    aco.tau_init = number_or(a, "tau_init", aco.tau_init);
    aco.deactivation_percentile =
        number_or(a, "deactivation_percentile", aco.deactivation_percentile);
    aco.deactivation_boost = number_or(a, "deactivation_boost", aco.deactivation_boost);
  }
  if (doc.contains("pso")) {
    const auto& p = doc.at("pso");
    pso.c1 = number_or(p, "c1", pso.c1);
    pso.c2 = number_or(p, "c2", pso.c2);
    pso.inertia = number_or(p, "inertia", pso.inertia);
    pso.v_max_ampso = number_or(p, "v_max_ampso", pso.v_max_ampso);
    pso.v_max_dpso = number_or(p, "v_max_dpso", pso.v_max_dpso);
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

// ---- misc ---------------------------------------------------------------

bool budget_free(Algorithm a) { return a == Algorithm::es || a == Algorithm::baseline; }

bool es_feasible(std::size_t num_bits, std::uint64_t cap) {
  return num_bits < 64 && (std::uint64_t{1} << num_bits) <= cap;
}

std::size_t worker_count(std::size_t requested, std::size_t tasks) {
  std::size_t n = requested ? requested : std::thread::hardware_concurrency();
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(tasks, 1));
}

/// Runs task(i) for i in [0, count) on a small pool. Each task writes only
/// its own slot, so results do not depend on scheduling.
template <typename Task>
void parallel_for(std::size_t count, std::size_t threads, Task task) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  const std::size_t n = worker_count(threads, count);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << std::setprecision(12);
  return out;
}

void write_json(const fs::path& path, const json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
}

std::string budget_tag(const BudgetPoint& b) {
  return "M" + std::to_string(b.population) + "_I" + std::to_string(b.iterations);
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

}  // namespace

// ---- algorithms ---------------------------------------------------------

Algorithm parse_algorithm(std::string_view name) {
  if (name == "es") return Algorithm::es;
  if (name == "dpso") return Algorithm::dpso;
  if (name == "ampso") return Algorithm::ampso;
  if (name == "as") return Algorithm::as;
  if (name == "mmas") return Algorithm::mmas;
  if (name == "sa") return Algorithm::sa;
  if (name == "baseline") return Algorithm::baseline;
  fail(ErrorKind::invalid_argument,
       "unknown algorithm '" + std::string(name) +
           "' (es|dpso|ampso|as|mmas|sa|baseline)");
}

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::es: return "es";
    case Algorithm::dpso: return "dpso";
    case Algorithm::ampso: return "ampso";
    case Algorithm::as: return "as";
    case Algorithm::mmas: return "mmas";
    case Algorithm::sa: return "sa";
    case Algorithm::baseline: return "baseline";
  }
  return "?";
}

HeuristicMode default_heuristic(UndecodedPolicy scenario) {
  return scenario == UndecodedPolicy::silent ? HeuristicMode::gp_deactivation
                                             : HeuristicMode::gw_average;
}

SearchTrace run_algorithm(Algorithm algorithm, const ChannelMatrix& channel,
                          const BudgetPoint& budget, RngSeed seed,
                          const SearchSettings& settings) {
  SearchBudget b{budget.population, budget.iterations, budget.temperature, seed};
  AcoParams aco = settings.aco;
  aco.heuristic = settings.heuristic;

  auto single_point = [](const SearchResult& r, double seconds) {
    SearchTrace t{{}, r.assignment};
    t.best_sum_rate = r.sum_rate;
    t.best_per_iteration = {r.sum_rate};
    t.evaluations = r.evaluations;
    t.evaluations_per_iteration = r.evaluations;
    t.wall_seconds = seconds;
    return t;
  };

  switch (algorithm) {
    case Algorithm::es: {
      const auto start = std::chrono::steady_clock::now();
      const auto r = exhaustive_search(channel, settings.mode, settings.enumeration_cap);
      return single_point(r, std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - start).count());
    }
    case Algorithm::baseline: {
      const auto start = std::chrono::steady_clock::now();
      const auto r = no_optimization_baseline(channel, settings.mode.undecoded);
      return single_point(r, std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - start).count());
    }
    case Algorithm::dpso: return dpso(channel, b, settings.pso, settings.mode);
    case Algorithm::ampso: return ampso(channel, b, settings.pso, settings.mode);
    case Algorithm::as: return ant_system(channel, b, aco, settings.mode);
    case Algorithm::mmas: return max_min_ant_system(channel, b, aco, settings.mode);
    case Algorithm::sa: return simulated_annealing(channel, b, settings.mode);
  }
  fail(ErrorKind::internal, "unhandled algorithm");
}

RngSeed replication_channel_seed(std::uint64_t master_seed, std::size_t replication) {
  return derive_seed(derive_seed(RngSeed{master_seed}, replication), 0);
}

RngSeed replication_run_seed(std::uint64_t master_seed, std::size_t replication,
                             std::size_t run) {
  return derive_seed(derive_seed(RngSeed{master_seed}, replication), run + 1);
}

// ---- experiment spec ----------------------------------------------------

ExperimentSpec ExperimentSpec::from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) fail(ErrorKind::parse, "experiment spec must be an object");
  ExperimentSpec spec;

  if (!doc.contains("instance") || !doc.at("instance").is_object()) {
    fail(ErrorKind::parse, "field 'instance' must be an object");
  }
  const auto& inst = doc.at("instance");
  if (inst.contains("file")) {
    spec.instance.file = resolve(base_dir, string_or(inst, "file", ""));
  } else if (inst.contains("generate")) {
    const auto& g = inst.at("generate");
    spec.instance.num_gps = count_or(g, "K", spec.instance.num_gps);
    spec.instance.num_gws = count_or(g, "N", spec.instance.num_gws);
    spec.instance.gp_power = Power::from_milliwatts(number_or(g, "P_mW", 1.0));
    spec.instance.noise_power = Power::from_milliwatts(number_or(g, "N0_mW", 1.0));
    spec.instance.sigma = number_or(g, "sigma", 1.0);
  } else {
    fail(ErrorKind::parse, "field 'instance' needs 'file' or 'generate'");
  }

  spec.algorithms = algorithm_list(doc, {});
  if (!doc.contains("budgets") || !doc.at("budgets").is_array()) {
    fail(ErrorKind::parse, "field 'budgets' must be an array");
  }
  for (const auto& b : doc.at("budgets")) spec.budgets.push_back(budget_from_json(b));

  spec.evaluator = parse_order_policy(string_or(doc, "evaluator", "fixed-order"));
  spec.scenario = scenario_field(doc, spec.scenario);
  spec.heuristic = heuristic_field(doc);
  apply_overrides(doc, spec.aco, spec.pso);
  spec.replications = count_or(doc, "replications", spec.replications);
  spec.master_seed = count_or(doc, "master_seed", spec.master_seed);
  spec.output_dir = resolve(base_dir, string_or(doc, "output_dir", "results"));
  spec.threads = count_or(doc, "threads", spec.threads);
  if (doc.contains("plots")) spec.plots = doc.at("plots").get<bool>();
  spec.enumeration_cap = count_or(doc, "enumeration_cap", spec.enumeration_cap);
  spec.validate();
  return spec;
}

ExperimentSpec ExperimentSpec::load(const fs::path& path) {
  return from_json(read_json_file(path), path.parent_path());
}

void ExperimentSpec::validate() const {
  require(replications >= 1, "experiment: replications must be >= 1");
  require(!algorithms.empty(), "experiment: at least one algorithm is required");
  const bool needs_budget = std::any_of(algorithms.begin(), algorithms.end(),
                                        [](Algorithm a) { return !budget_free(a); });
  require(!needs_budget || !budgets.empty(),
          "experiment: at least one budget is required");
  for (const auto& b : budgets) {
    SearchBudget{b.population, b.iterations, b.temperature, {}}.validate();
  }
  if (!instance.file) {
    require(instance.num_gps >= 1 && instance.num_gws >= 1,
            "experiment: K and N must be >= 1");
    require(instance.sigma > 0.0, "experiment: sigma must be > 0");
  }
}

SearchSettings ExperimentSpec::settings() const {
  return {EvaluationMode{evaluator, scenario}, heuristic.value_or(default_heuristic(scenario)),
          aco, pso, enumeration_cap};
}

// ---- run_experiment -----------------------------------------------------

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const SearchSettings settings = spec.settings();

  std::optional<ChannelMatrix> fixed;
  if (spec.instance.file) fixed = load_channel(*spec.instance.file);
  auto channel_for = [&](std::size_t r) {
    if (fixed) return *fixed;
    return generate_rayleigh(spec.instance.num_gps, spec.instance.num_gws,
                             spec.instance.gp_power, spec.instance.noise_power,
                             replication_channel_seed(spec.master_seed, r),
                             spec.instance.sigma);
  };
  const std::size_t num_bits = fixed ? fixed->num_gps() * fixed->num_gws()
                                     : spec.instance.num_gps * spec.instance.num_gws;
  const bool es_ok = es_feasible(num_bits, spec.enumeration_cap);

  // Runs: each listed search algorithm against each budget; ES and the
  // baseline once per replication.
  struct RunKey {
    Algorithm algorithm;
    std::optional<std::size_t> budget;
  };
  std::vector<RunKey> keys;
  for (Algorithm a : spec.algorithms) {
    if (budget_free(a)) {
      if (a == Algorithm::es && !es_ok) continue;
      keys.push_back({a, std::nullopt});
    } else {
      for (std::size_t b = 0; b < spec.budgets.size(); ++b) keys.push_back({a, b});
    }
  }

  struct Replication {
    std::optional<double> es;
    double baseline = 0.0;
    std::vector<SearchTrace> runs;
  };
  std::vector<Replication> reps(spec.replications);

  parallel_for(spec.replications, spec.threads, [&](std::size_t r) {
    const ChannelMatrix channel = channel_for(r);
    Replication& rep = reps[r];
    rep.baseline = no_optimization_baseline(channel, settings.mode.undecoded).sum_rate;
    rep.runs.reserve(keys.size());
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const BudgetPoint budget = keys[k].budget ? spec.budgets[*keys[k].budget] : BudgetPoint{};
      rep.runs.push_back(run_algorithm(keys[k].algorithm, channel, budget,
                                       replication_run_seed(spec.master_seed, r, k),
                                       settings));
      if (keys[k].algorithm == Algorithm::es) rep.es = rep.runs.back().best_sum_rate;
    }
    if (es_ok && !rep.es) {
      rep.es = exhaustive_search(channel, settings.mode, settings.enumeration_cap).sum_rate;
    }
  });

  ExperimentResult result;
  result.es_available = es_ok;
  for (const auto& rep : reps) {
    if (rep.es) result.es_optimum.push_back(*rep.es);
    result.baseline.push_back(rep.baseline);
  }

  for (std::size_t k = 0; k < keys.size(); ++k) {
    const BudgetPoint budget = keys[k].budget ? spec.budgets[*keys[k].budget] : BudgetPoint{0, 0, 0.0};
    std::vector<double> finals;
    double wall = 0.0, sq = 0.0;
    std::size_t length = std::numeric_limits<std::size_t>::max();
    for (std::size_t r = 0; r < reps.size(); ++r) {
      const auto& run = reps[r].runs[k];
      finals.push_back(run.best_sum_rate);
      wall += run.wall_seconds;
      length = std::min(length, run.best_per_iteration.size());
      if (es_ok) sq += std::pow(run.best_sum_rate - *reps[r].es, 2);
    }
    const auto stats = mean_std(finals);
    SummaryRow row{keys[k].algorithm, budget, reps.size(), stats.mean, stats.stddev,
                   std::nullopt, wall / static_cast<double>(reps.size())};
    if (es_ok) row.mse = sq / static_cast<double>(reps.size());
    result.summary.push_back(row);

    const std::size_t stride = reps.front().runs[k].evaluations_per_iteration;
    for (std::size_t t = 0; t < length; ++t) {
      ConvergenceRow c{keys[k].algorithm, budget, t, (t + 1) * stride, 0.0, std::nullopt};
      double msq = 0.0;
      for (const auto& rep : reps) {
        c.mean_best += rep.runs[k].best_per_iteration[t];
        if (es_ok) msq += std::pow(rep.runs[k].best_per_iteration[t] - *rep.es, 2);
      }
      c.mean_best /= static_cast<double>(reps.size());
      if (es_ok) c.mse = msq / static_cast<double>(reps.size());
      result.convergence.push_back(c);
    }
  }

  // Output. Columns are fixed; budget columns stay empty for ES and the
  // baseline, MSE columns exist only when ES was feasible.
  ensure_dir(spec.output_dir);
  auto budget_cols = [](std::ostream& out, Algorithm a, const BudgetPoint& b) {
    if (budget_free(a)) {
      out << ",,";
    } else {
      out << b.population << ',' << b.iterations << ',' << b.temperature;
    }
  };

  {
    const fs::path path = spec.output_dir / "traces.csv";
    auto out = open_output(path);
    out << "algorithm,M,I,T,replication,iteration,evaluations,best_sum_rate\n";
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const BudgetPoint budget = keys[k].budget ? spec.budgets[*keys[k].budget] : BudgetPoint{};
      for (std::size_t r = 0; r < reps.size(); ++r) {
        const auto& run = reps[r].runs[k];
        for (std::size_t t = 0; t < run.best_per_iteration.size(); ++t) {
          out << to_string(keys[k].algorithm) << ',';
          budget_cols(out, keys[k].algorithm, budget);
          out << ',' << r << ',' << t << ',' << (t + 1) * run.evaluations_per_iteration
              << ',' << run.best_per_iteration[t] << '\n';
        }
      }
    }
    result.files.push_back(path);
  }
  {
    const fs::path path = spec.output_dir / "convergence.csv";
    auto out = open_output(path);
    out << "algorithm,M,I,T,iteration,evaluations,mean_best_sum_rate"
        << (es_ok ? ",mse\n" : "\n");
    for (const auto& c : result.convergence) {
      out << to_string(c.algorithm) << ',';
      budget_cols(out, c.algorithm, c.budget);
      out << ',' << c.iteration << ',' << c.evaluations << ',' << c.mean_best;
      if (es_ok) out << ',' << *c.mse;
      out << '\n';
    }
    result.files.push_back(path);
  }
  {
    const fs::path path = spec.output_dir / "summary.csv";
    auto out = open_output(path);
    out << "algorithm,M,I,T,status,replications,mean_sum_rate,std_sum_rate"
        << (es_ok ? ",mse" : "") << ",mean_wall_seconds\n";
    for (const auto& s : result.summary) {
      out << to_string(s.algorithm) << ',';
      budget_cols(out, s.algorithm, s.budget);
      out << ",ok," << s.replications << ',' << s.mean << ',' << s.stddev;
      if (es_ok) out << ',' << *s.mse;
      out << ',' << s.mean_wall_seconds << '\n';
    }
    if (!es_ok && std::find(spec.algorithms.begin(), spec.algorithms.end(),
                            Algorithm::es) != spec.algorithms.end()) {
      out << "es,,,,unavailable,0,,,\n";
    }
    result.files.push_back(path);
  }
  {
    json meta;
    meta["instance"] = spec.instance.file
                           ? json{{"file", spec.instance.file->string()}}
                           : json{{"generate",
                                   {{"K", spec.instance.num_gps},
                                    {"N", spec.instance.num_gws},
                                    {"P_mW", spec.instance.gp_power.milliwatts()},
                                    {"N0_mW", spec.instance.noise_power.milliwatts()},
                                    {"sigma", spec.instance.sigma}}}};
    meta["algorithms"] = json::array();
    for (Algorithm a : spec.algorithms) meta["algorithms"].push_back(to_string(a));
    meta["budgets"] = json::array();
    for (const auto& b : spec.budgets) meta["budgets"].push_back(budget_to_json(b));
    meta["evaluator"] = to_string(spec.evaluator);
    meta["scenario"] = spec.scenario == UndecodedPolicy::silent ? 2 : 1;
    meta["heuristic"] = to_string(settings.heuristic);
    meta["replications"] = spec.replications;
    meta["master_seed"] = spec.master_seed;
    meta["es_available"] = es_ok;
    meta["enumeration_cap"] = spec.enumeration_cap;
    meta["seed_derivation"] =
        "channel r: derive_seed(derive_seed(master, r), 0); "
        "run k of r: derive_seed(derive_seed(master, r), k + 1)";
    const fs::path path = spec.output_dir / "metadata.json";
    write_json(path, meta);
    result.files.push_back(path);
  }

  if (spec.plots) {
    for (const auto& budget : spec.budgets) {
      std::vector<plot::Series> best, mse;
      for (const Algorithm a : spec.algorithms) {
        if (budget_free(a)) continue;
        plot::Series sb{std::string(to_string(a)), {}, {}}, sm = sb;
        for (const auto& c : result.convergence) {
          if (c.algorithm != a || c.budget.population != budget.population ||
              c.budget.iterations != budget.iterations ||
              c.budget.temperature != budget.temperature) {
            continue;
          }
          sb.x.push_back(static_cast<double>(c.evaluations));
          sb.y.push_back(c.mean_best);
          if (c.mse) {
            sm.x.push_back(static_cast<double>(c.evaluations));
            sm.y.push_back(*c.mse);
          }
        }
        best.push_back(std::move(sb));
        if (es_ok) mse.push_back(std::move(sm));
      }
      if (best.empty()) continue;
      const double span = static_cast<double>(budget.population * budget.iterations);
      if (es_ok) {
        const double es_mean = mean_std(result.es_optimum).mean;
        best.push_back({"es", {0.0, span}, {es_mean, es_mean}});
      }
      const double base_mean = mean_std(result.baseline).mean;
      best.push_back({"baseline", {0.0, span}, {base_mean, base_mean}});

      const std::string tag = budget_tag(budget);
      const fs::path conv = spec.output_dir / ("convergence_" + tag + ".svg");
      plot::write_line_chart(conv, {"Mean best sum-rate, " + tag, "objective evaluations",
                                    "sum-rate (bps/Hz)", false},
                             best);
      result.files.push_back(conv);
      if (es_ok) {
        const fs::path m = spec.output_dir / ("mse_" + tag + ".svg");
        plot::write_line_chart(m, {"MSE vs. exhaustive optimum, " + tag,
                                   "objective evaluations", "MSE", true},
                               mse);
        result.files.push_back(m);
      }
    }
  }
  return result;
}

// ---- gateway sizing -----------------------------------------------------

GwSizingSpec GwSizingSpec::from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) fail(ErrorKind::parse, "gw-sizing spec must be an object");
  GwSizingSpec spec;
  spec.gp_counts = count_list(doc, "gp_counts");
  spec.gw_counts = count_list(doc, "gw_counts");
  spec.rate_kbps = number_or(doc, "rate_kbps", spec.rate_kbps);
  spec.bandwidth_khz = number_or(doc, "bandwidth_khz", spec.bandwidth_khz);
  spec.algorithms = algorithm_list(doc, spec.algorithms);
  if (doc.contains("budget")) spec.budget = budget_from_json(doc.at("budget"));
  spec.evaluator = parse_order_policy(string_or(doc, "evaluator", "fixed-order"));
  spec.scenario = scenario_field(doc, spec.scenario);
  spec.heuristic = heuristic_field(doc);
  spec.gp_power = Power::from_milliwatts(number_or(doc, "P_mW", 1.0));
  spec.noise_power = Power::from_milliwatts(number_or(doc, "N0_mW", 1.0));
  spec.replications = count_or(doc, "replications", spec.replications);
  spec.master_seed = count_or(doc, "master_seed", spec.master_seed);
  spec.output_dir = resolve(base_dir, string_or(doc, "output_dir", "results"));
  spec.threads = count_or(doc, "threads", spec.threads);
  if (doc.contains("plots")) spec.plots = doc.at("plots").get<bool>();
  spec.validate();
  return spec;
}

GwSizingSpec GwSizingSpec::load(const fs::path& path) {
  return from_json(read_json_file(path), path.parent_path());
}

void GwSizingSpec::validate() const {
  require(!gp_counts.empty() && !gw_counts.empty(),
          "gw-sizing: gp_counts and gw_counts must be non-empty");
  for (auto k : gp_counts) require(k >= 1, "gw-sizing: gp counts must be >= 1");
  for (auto n : gw_counts) require(n >= 1, "gw-sizing: gw counts must be >= 1");
  require(std::isfinite(rate_kbps) && rate_kbps > 0.0, "gw-sizing: rate_kbps must be > 0");
  require(std::isfinite(bandwidth_khz) && bandwidth_khz > 0.0,
          "gw-sizing: bandwidth_khz must be > 0");
  require(replications >= 1, "gw-sizing: replications must be >= 1");
  require(!algorithms.empty(), "gw-sizing: at least one algorithm is required");
  SearchBudget{budget.population, budget.iterations, budget.temperature, {}}.validate();
}

GwSizingResult run_gw_sizing(const GwSizingSpec& spec) {
  spec.validate();
  const SearchSettings settings{EvaluationMode{spec.evaluator, spec.scenario},
                                spec.heuristic.value_or(default_heuristic(spec.scenario)),
                                AcoParams{}, PsoParams{}, kDefaultEnumerationCap};

  struct Task {
    std::size_t gw_index, gp_index, replication;
  };
  std::vector<Task> tasks;
  for (std::size_t n = 0; n < spec.gw_counts.size(); ++n) {
    for (std::size_t k = 0; k < spec.gp_counts.size(); ++k) {
      for (std::size_t r = 0; r < spec.replications; ++r) tasks.push_back({n, k, r});
    }
  }
  // sums[task][algorithm]
  std::vector<std::vector<double>> sums(tasks.size());

  parallel_for(tasks.size(), spec.threads, [&](std::size_t t) {
    const auto& task = tasks[t];
    const std::size_t num_gws = spec.gw_counts[task.gw_index];
    const std::size_t num_gps = spec.gp_counts[task.gp_index];
    // Every algorithm sees the same channel for a given (N, K, r).
    const RngSeed cell = derive_seed(derive_seed(RngSeed{spec.master_seed}, num_gws), num_gps);
    const RngSeed rep = derive_seed(cell, task.replication);
    const ChannelMatrix channel = generate_rayleigh(num_gps, num_gws, spec.gp_power,
                                                    spec.noise_power, derive_seed(rep, 0));
    for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
      sums[t].push_back(run_algorithm(spec.algorithms[a], channel, spec.budget,
                                      derive_seed(rep, a + 1), settings)
                            .best_sum_rate);
    }
  });

  GwSizingResult result;
  for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
    for (std::size_t n = 0; n < spec.gw_counts.size(); ++n) {
      GwSizingResult::Capacity cap{spec.algorithms[a], spec.gw_counts[n], std::nullopt};
      for (std::size_t k = 0; k < spec.gp_counts.size(); ++k) {
        double total = 0.0;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
          if (tasks[t].gw_index == n && tasks[t].gp_index == k) total += sums[t][a];
        }
        GwSizingCell cell;
        cell.algorithm = spec.algorithms[a];
        cell.num_gws = spec.gw_counts[n];
        cell.num_gps = spec.gp_counts[k];
        cell.mean_sum_rate = total / static_cast<double>(spec.replications);
        cell.per_gp_bps_hz = cell.mean_sum_rate / static_cast<double>(cell.num_gps);
        cell.per_gp_kbps = to_kbps(cell.per_gp_bps_hz, spec.bandwidth_khz);
        if (cell.per_gp_kbps >= spec.rate_kbps &&
            (!cap.max_gps || cell.num_gps > *cap.max_gps)) {
          cap.max_gps = cell.num_gps;
        }
        result.cells.push_back(cell);
      }
      result.capacity.push_back(cap);
    }
  }

  ensure_dir(spec.output_dir);
  {
    const fs::path path = spec.output_dir / "gw_sizing.csv";
    auto out = open_output(path);
    out << "algorithm,num_gws,num_gps,replications,mean_sum_rate,per_gp_bps_hz,"
           "per_gp_kbps,meets_requirement\n";
    for (const auto& c : result.cells) {
      out << to_string(c.algorithm) << ',' << c.num_gws << ',' << c.num_gps << ','
          << spec.replications << ',' << c.mean_sum_rate << ',' << c.per_gp_bps_hz << ','
          << c.per_gp_kbps << ',' << (c.per_gp_kbps >= spec.rate_kbps ? 1 : 0) << '\n';
    }
    result.files.push_back(path);
  }
  {
    const fs::path path = spec.output_dir / "gw_capacity.csv";
    auto out = open_output(path);
    out << "algorithm,num_gws,max_gps\n";
    for (const auto& c : result.capacity) {
      out << to_string(c.algorithm) << ',' << c.num_gws << ',';
      if (c.max_gps) out << *c.max_gps;
      out << '\n';
    }
    result.files.push_back(path);
  }
  {
    json meta{{"rate_kbps", spec.rate_kbps},
              {"bandwidth_khz", spec.bandwidth_khz},
              {"budget", budget_to_json(spec.budget)},
              {"evaluator", to_string(spec.evaluator)},
              {"scenario", spec.scenario == UndecodedPolicy::silent ? 2 : 1},
              {"heuristic", to_string(settings.heuristic)},
              {"replications", spec.replications},
              {"master_seed", spec.master_seed},
              {"gp_counts", spec.gp_counts},
              {"gw_counts", spec.gw_counts}};
    meta["algorithms"] = json::array();
    for (Algorithm a : spec.algorithms) meta["algorithms"].push_back(to_string(a));
    const fs::path path = spec.output_dir / "metadata.json";
    write_json(path, meta);
    result.files.push_back(path);
  }
  if (spec.plots) {
    std::vector<plot::Series> series;
    for (const auto& c : result.cells) {
      const std::string label =
          std::string(to_string(c.algorithm)) + " N=" + std::to_string(c.num_gws);
      if (series.empty() || series.back().label != label) series.push_back({label, {}, {}});
      series.back().x.push_back(static_cast<double>(c.num_gps));
      series.back().y.push_back(c.per_gp_kbps);
    }
    const double lo = static_cast<double>(*std::min_element(spec.gp_counts.begin(), spec.gp_counts.end()));
    const double hi = static_cast<double>(*std::max_element(spec.gp_counts.begin(), spec.gp_counts.end()));
    series.push_back({"requirement", {lo, hi}, {spec.rate_kbps, spec.rate_kbps}});
    const fs::path path = spec.output_dir / "gw_sizing.svg";
    plot::write_line_chart(path, {"Average rate per geophone", "geophones (K)",
                                  "kbps per geophone", false},
                           series);
    result.files.push_back(path);
  }
  return result;
}

}  // namespace geosic
