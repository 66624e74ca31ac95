#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "geosic/network_model.hpp"
#include "geosic/random.hpp"
#include "geosic/rate_engine.hpp"

namespace geosic {

/// Population size M, iteration count I, SA start temperature T.
/// SA spends M * I evaluations so budgets are comparable across algorithms.
struct SearchBudget {
  std::size_t population = 30;
  std::size_t iterations = 30;
  double sa_max_temperature = 900.0;
  RngSeed seed{};

  /// Budget with T = M * I.
  static SearchBudget make(std::size_t population, std::size_t iterations,
                           std::uint64_t seed) {
    return {population, iterations,
            static_cast<double>(population * iterations), RngSeed{seed}};
  }
  void validate() const;
};

struct PsoParams {
  double c1 = 1.496;
  double c2 = 1.496;
  double inertia = 0.729;
  double v_max_ampso = 4.0;
  double v_max_dpso = 6.0;
};

enum class HeuristicMode {
  none,             // eta = 1 everywhere
  gw_average,       // link gain vs. other links' mean, weighted per gateway
  gp_deactivation,  // gw_average plus a bias towards switching off weak geophones
};

HeuristicMode parse_heuristic_mode(std::string_view name);
std::string_view to_string(HeuristicMode mode);

struct AcoParams {
  double alpha = 1.0;
  double beta = 1.0;
  double evaporation = 0.1;
  double tau_max = 7.0;
  double tau_min = -7.0;
  double tau_init = 0.0;
  HeuristicMode heuristic = HeuristicMode::none;
  double deactivation_percentile = 25.0;
  double deactivation_boost = 4.0;
};

/// eta[c][d] for outcome c in {0, 1} and bit d = j * N + i.
struct HeuristicTable {
  std::array<std::vector<double>, 2> eta;
};

struct SearchTrace {
  std::vector<double> best_per_iteration;  // best-so-far after each iteration
  DecodingAssignment best;
  double best_sum_rate = 0.0;
  std::size_t evaluations = 0;
  std::size_t evaluations_per_iteration = 0;
  double wall_seconds = 0.0;
};

struct SearchResult {
  DecodingAssignment assignment;
  double sum_rate = 0.0;
  std::size_t evaluations = 0;
};

/// Counts objective evaluations for budget accounting.
class Objective {
 public:
  Objective(const ChannelMatrix& channel, EvaluationMode mode)
      : channel_(&channel), mode_(mode) {}

  double operator()(const DecodingAssignment& f) {
    ++count_;
    return evaluate(*channel_, f, mode_).sum_rate;
  }
  std::size_t evaluations() const { return count_; }
  const ChannelMatrix& channel() const { return *channel_; }
  EvaluationMode mode() const { return mode_; }

 private:
  const ChannelMatrix* channel_;
  EvaluationMode mode_;
  std::size_t count_ = 0;
};

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 24;

/// Global maximizer over all 2^(K N) assignments. Ties keep the
/// lexicographically smallest flags.
SearchResult exhaustive_search(const ChannelMatrix& channel, EvaluationMode mode,
                               std::uint64_t enumeration_cap = kDefaultEnumerationCap);

/// Decode-all assignment with the fixed-order evaluator.
SearchResult no_optimization_baseline(const ChannelMatrix& channel,
                                      UndecodedPolicy policy);

SearchTrace dpso(const ChannelMatrix& channel, const SearchBudget& budget,
                 const PsoParams& params, EvaluationMode mode);
SearchTrace ampso(const ChannelMatrix& channel, const SearchBudget& budget,
                  const PsoParams& params, EvaluationMode mode);
/// Sees (tau_0, tau_1) over all bits after every pheromone update.
using PheromoneObserver =
    std::function<void(std::span<const double>, std::span<const double>)>;

SearchTrace ant_system(const ChannelMatrix& channel, const SearchBudget& budget,
                       const AcoParams& params, EvaluationMode mode,
                       const PheromoneObserver& observer = {});
SearchTrace max_min_ant_system(const ChannelMatrix& channel,
                               const SearchBudget& budget,
                               const AcoParams& params, EvaluationMode mode,
                               const PheromoneObserver& observer = {});
SearchTrace simulated_annealing(const ChannelMatrix& channel,
                                const SearchBudget& budget, EvaluationMode mode);

HeuristicTable build_heuristic(const ChannelMatrix& channel, HeuristicMode mode,
                               double deactivation_percentile = 25.0,
                               double deactivation_boost = 4.0);

// Building blocks, exposed for testing.
namespace detail {

double sigmoid(double v);

/// Angle-modulation generator sin(2 pi (x - a) b cos(2 pi c (x - a))) + d.
double angle_modulation(double a, double b, double c, double d, double x);

/// Samples the generator at x_k = k and sets bit k iff the value is >= 0.
std::vector<std::uint8_t> angle_modulation_bits(std::span<const double, 4> abcd,
                                                std::size_t num_bits);

/// Probability of choosing outcome 1 for one bit. Pheromones are shifted by
/// -tau_min + 1e-6 so negative values stay valid weights.
double choice_probability_one(double tau0, double tau1, double eta0, double eta1,
                              const AcoParams& params);

/// tau <- (1 - evaporation) tau + deposit, optionally clamped to [lo, hi].
double pheromone_update(double tau, double evaporation, double deposit);
double pheromone_update_clamped(double tau, double evaporation, double deposit,
                                double lo, double hi);

/// exp(delta / T) for worsening moves, 1 otherwise.
double sa_acceptance_probability(double delta, double temperature);

/// Geometric schedule T_k = T_max 0.95^k.
double sa_temperature(double t_max, std::size_t step);
inline constexpr double kSaCooling = 0.95;
inline constexpr double kSaFloorRatio = 1e-3;

}  // namespace detail

}  // namespace geosic
