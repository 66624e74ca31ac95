#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "geosic/decode_search.hpp"
#include "geosic/network_model.hpp"
#include "geosic/rate_engine.hpp"

namespace geosic {

enum class Algorithm { es, dpso, ampso, as, mmas, sa, baseline };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algorithm);

struct BudgetPoint {
  std::size_t population = 10;
  std::size_t iterations = 60;
  double temperature = 600.0;  // SA start temperature
};

/// Parameters shared by every stage-1 run.
struct SearchSettings {
  EvaluationMode mode{};
  HeuristicMode heuristic = HeuristicMode::none;
  AcoParams aco{};
  PsoParams pso{};
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
};

/// Scenario 1 ants use the gateway-average heuristic, Scenario 2 ants add
/// geophone deactivation.
HeuristicMode default_heuristic(UndecodedPolicy scenario);

/// One run of `algorithm`. ES and the baseline report a single trace point.
SearchTrace run_algorithm(Algorithm algorithm, const ChannelMatrix& channel,
                          const BudgetPoint& budget, RngSeed seed,
                          const SearchSettings& settings);

/// Where replication instances come from: a fixed file, or fresh Rayleigh
/// draws per replication.
struct InstanceSource {
  std::optional<std::filesystem::path> file;
  std::size_t num_gps = 8;
  std::size_t num_gws = 2;
  Power gp_power = Power::from_milliwatts(1.0);
  Power noise_power = Power::from_milliwatts(1.0);
  double sigma = 1.0;
};

struct ExperimentSpec {
  InstanceSource instance;
  std::vector<Algorithm> algorithms;
  std::vector<BudgetPoint> budgets;
  OrderPolicy evaluator = OrderPolicy::descending_gain_corner;
  UndecodedPolicy scenario = UndecodedPolicy::interferes;
  std::optional<HeuristicMode> heuristic;  // empty: scenario default
  AcoParams aco{};
  PsoParams pso{};
  std::size_t replications = 1;
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "results";
  std::size_t threads = 0;  // 0: hardware concurrency
  bool plots = true;
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;

  /// Relative paths in `doc` resolve against `base_dir`.
  static ExperimentSpec from_json(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir = {});
  static ExperimentSpec load(const std::filesystem::path& path);
  void validate() const;
  SearchSettings settings() const;
};

struct SummaryRow {
  Algorithm algorithm{};
  BudgetPoint budget;
  std::size_t replications = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<double> mse;  // vs. ES, when ES is available
  double mean_wall_seconds = 0.0;
};

struct ConvergenceRow {
  Algorithm algorithm{};
  BudgetPoint budget;
  std::size_t iteration = 0;
  std::size_t evaluations = 0;
  double mean_best = 0.0;
  std::optional<double> mse;
};

struct ExperimentResult {
  bool es_available = false;
  std::vector<double> es_optimum;  // per replication, empty if unavailable
  std::vector<double> baseline;    // per replication
  std::vector<SummaryRow> summary;
  std::vector<ConvergenceRow> convergence;
  std::vector<std::filesystem::path> files;
};

/// Per-replication seeds: the channel of replication r is drawn from
/// derive_seed(derive_seed(master, r), 0) and run k of that replication
/// (algorithm-major, then budget) from derive_seed(derive_seed(master, r), k + 1).
RngSeed replication_channel_seed(std::uint64_t master_seed, std::size_t replication);
RngSeed replication_run_seed(std::uint64_t master_seed, std::size_t replication,
                             std::size_t run);

/// Runs every (algorithm, budget, replication) and writes traces.csv,
/// convergence.csv, summary.csv, metadata.json and optional SVG plots.
ExperimentResult run_experiment(const ExperimentSpec& spec);

struct GwSizingSpec {
  std::vector<std::size_t> gp_counts;
  std::vector<std::size_t> gw_counts;
  double rate_kbps = 144.0;
  double bandwidth_khz = 200.0;
  std::vector<Algorithm> algorithms{Algorithm::as, Algorithm::dpso};
  BudgetPoint budget{30, 30, 900.0};
  OrderPolicy evaluator = OrderPolicy::descending_gain_corner;
  UndecodedPolicy scenario = UndecodedPolicy::silent;
  std::optional<HeuristicMode> heuristic;
  Power gp_power = Power::from_milliwatts(1.0);
  Power noise_power = Power::from_milliwatts(1.0);
  std::size_t replications = 10;
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "results";
  std::size_t threads = 0;
  bool plots = true;

  static GwSizingSpec from_json(const nlohmann::json& doc,
                                const std::filesystem::path& base_dir = {});
  static GwSizingSpec load(const std::filesystem::path& path);
  void validate() const;
};

struct GwSizingCell {
  Algorithm algorithm{};
  std::size_t num_gws = 0;
  std::size_t num_gps = 0;
  double mean_sum_rate = 0.0;
  double per_gp_bps_hz = 0.0;
  double per_gp_kbps = 0.0;
};

struct GwSizingResult {
  std::vector<GwSizingCell> cells;
  // Largest swept K whose mean per-GP rate meets the requirement, per
  // (algorithm, gateway count); empty when no K does.
  struct Capacity {
    Algorithm algorithm{};
    std::size_t num_gws = 0;
    std::optional<std::size_t> max_gps;
  };
  std::vector<Capacity> capacity;
  std::vector<std::filesystem::path> files;
};

/// Writes gw_sizing.csv, gw_capacity.csv, metadata.json and optional plots.
GwSizingResult run_gw_sizing(const GwSizingSpec& spec);

/// bps/Hz to kbps at `bandwidth_khz`.
inline double to_kbps(double bps_hz, double bandwidth_khz) {
  return bps_hz * bandwidth_khz;
}

}  // namespace geosic
