#include "geosic/decode_search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "geosic/error.hpp"

namespace geosic {

void SearchBudget::validate() const {
  require(population >= 1, "budget: population M must be >= 1");
  require(iterations >= 1, "budget: iterations I must be >= 1");
  require(sa_max_temperature >= 1.0, "budget: SA temperature T must be >= 1");
}

HeuristicMode parse_heuristic_mode(std::string_view name) {
  if (name == "none") return HeuristicMode::none;
  if (name == "gw-average") return HeuristicMode::gw_average;
  if (name == "gp-deactivation") return HeuristicMode::gp_deactivation;
  fail(ErrorKind::invalid_argument,
       "unknown heuristic '" + std::string(name) +
           "' (none|gw-average|gp-deactivation)");
}

std::string_view to_string(HeuristicMode mode) {
  switch (mode) {
    case HeuristicMode::none: return "none";
    case HeuristicMode::gw_average: return "gw-average";
    case HeuristicMode::gp_deactivation: return "gp-deactivation";
  }
  return "none";
}

namespace detail {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double angle_modulation(double a, double b, double c, double d, double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return std::sin(two_pi * (x - a) * b * std::cos(two_pi * c * (x - a))) + d;
}

std::vector<std::uint8_t> angle_modulation_bits(std::span<const double, 4> abcd,
                                                std::size_t num_bits) {
  std::vector<std::uint8_t> bits(num_bits);
  for (std::size_t k = 0; k < num_bits; ++k) {
    const double x = static_cast<double>(k);
    bits[k] = angle_modulation(abcd[0], abcd[1], abcd[2], abcd[3], x) >= 0.0;
  }
  return bits;
}

double choice_probability_one(double tau0, double tau1, double eta0, double eta1,
                              const AcoParams& params) {
  const double shift = -params.tau_min + 1e-6;
  const double w0 = std::pow(tau0 + shift, params.alpha) * std::pow(eta0, params.beta);
  const double w1 = std::pow(tau1 + shift, params.alpha) * std::pow(eta1, params.beta);
  const double total = w0 + w1;
  if (!(total > 0.0) || !std::isfinite(total)) return 0.5;
  return w1 / total;
}

double pheromone_update(double tau, double evaporation, double deposit) {
  return (1.0 - evaporation) * tau + deposit;
}

double pheromone_update_clamped(double tau, double evaporation, double deposit,
                                double lo, double hi) {
  return std::clamp(pheromone_update(tau, evaporation, deposit), lo, hi);
}

double sa_acceptance_probability(double delta, double temperature) {
  if (delta >= 0.0) return 1.0;
  return std::exp(delta / temperature);
}

double sa_temperature(double t_max, std::size_t step) {
  return t_max * std::pow(kSaCooling, static_cast<double>(step));
}

}  // namespace detail

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void random_bits(Rng& rng, DecodingAssignment& f) {
  for (std::size_t d = 0; d < f.num_bits(); ++d) f.set_bit(d, rng.bernoulli(0.5));
}

// Keeps the incumbent; strict improvement only, so the first found wins ties.
struct Incumbent {
  DecodingAssignment assignment;
  double value = -std::numeric_limits<double>::infinity();

  bool offer(const DecodingAssignment& f, double v) {
    if (v > value) {
      value = v;
      assignment = f;
      return true;
    }
    return false;
  }
};

SearchTrace finish(Incumbent&& best, std::vector<double>&& per_iteration,
                   const Objective& objective, std::size_t per_iteration_evals,
                   Clock::time_point start) {
  SearchTrace trace{std::move(per_iteration), std::move(best.assignment),
                    best.value, objective.evaluations(), per_iteration_evals,
                    seconds_since(start)};
  return trace;
}

}  // namespace

SearchResult exhaustive_search(const ChannelMatrix& channel, EvaluationMode mode,
                               std::uint64_t enumeration_cap) {
  const std::size_t bits = channel.num_gps() * channel.num_gws();
  if (bits >= 63 || (std::uint64_t{1} << bits) > enumeration_cap) {
    fail(ErrorKind::capacity,
         "exhaustive search over 2^" + std::to_string(bits) +
             " assignments exceeds the enumeration cap of " +
             std::to_string(enumeration_cap) + "; use a metaheuristic");
  }
  Objective objective(channel, mode);
  DecodingAssignment f(channel.num_gps(), channel.num_gws());
  Incumbent best{f};
  const std::uint64_t count = std::uint64_t{1} << bits;
  // Flag d is bit (bits-1-d) of the counter, so counting up walks the flags
  // in lexicographic order.
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (std::size_t d = 0; d < bits; ++d) f.set_bit(d, mask >> (bits - 1 - d) & 1u);
    best.offer(f, objective(f));
  }
  return {std::move(best.assignment), best.value, objective.evaluations()};
}

SearchResult no_optimization_baseline(const ChannelMatrix& channel,
                                      UndecodedPolicy policy) {
  auto f = DecodingAssignment::all_ones(channel.num_gps(), channel.num_gws());
  const double value = evaluate_fixed_order(channel, f, policy).sum_rate;
  return {std::move(f), value, 1};
}

// ---------------------------------------------------------------------------
// Binary PSO: velocity is the logit of P(bit = 1).

SearchTrace dpso(const ChannelMatrix& channel, const SearchBudget& budget,
                 const PsoParams& params, EvaluationMode mode) {
  budget.validate();
  const auto start = Clock::now();
  const std::size_t num_bits = channel.num_gps() * channel.num_gws();
  const std::size_t m = budget.population;
  Rng rng(budget.seed);
  Objective objective(channel, mode);

  std::vector<DecodingAssignment> position(
      m, DecodingAssignment(channel.num_gps(), channel.num_gws()));
  std::vector<std::vector<double>> velocity(m, std::vector<double>(num_bits, 0.0));
  std::vector<DecodingAssignment> personal = position;
  std::vector<double> personal_value(m);
  Incumbent global{position[0]};
  std::vector<double> trace;
  trace.reserve(budget.iterations);

  for (std::size_t p = 0; p < m; ++p) {
    random_bits(rng, position[p]);
    personal[p] = position[p];
    personal_value[p] = objective(position[p]);
  }
  for (std::size_t p = 0; p < m; ++p) global.offer(personal[p], personal_value[p]);
  trace.push_back(global.value);

  for (std::size_t t = 1; t < budget.iterations; ++t) {
    const DecodingAssignment leader = global.assignment;
    for (std::size_t p = 0; p < m; ++p) {
      auto& x = position[p];
      auto& v = velocity[p];
      for (std::size_t d = 0; d < num_bits; ++d) {
        const double xd = x.bit(d);
        const double phi1 = params.c1 * rng.uniform();
        const double phi2 = params.c2 * rng.uniform();
        v[d] += phi1 * (personal[p].bit(d) - xd) + phi2 * (leader.bit(d) - xd);
        v[d] = std::clamp(v[d], -params.v_max_dpso, params.v_max_dpso);
        x.set_bit(d, rng.uniform() < detail::sigmoid(v[d]));
      }
      const double value = objective(x);
      if (value > personal_value[p]) {
        personal_value[p] = value;
        personal[p] = x;
      }
    }
    for (std::size_t p = 0; p < m; ++p) global.offer(personal[p], personal_value[p]);
    trace.push_back(global.value);
  }
  return finish(std::move(global), std::move(trace), objective, m, start);
}

// ---------------------------------------------------------------------------
// Angle-modulated PSO: continuous swarm over the generator's (a, b, c, d).

SearchTrace ampso(const ChannelMatrix& channel, const SearchBudget& budget,
                  const PsoParams& params, EvaluationMode mode) {
  budget.validate();
  const auto start = Clock::now();
  const std::size_t num_gps = channel.num_gps();
  const std::size_t num_gws = channel.num_gws();
  const std::size_t num_bits = num_gps * num_gws;
  const std::size_t m = budget.population;
  Rng rng(budget.seed);
  Objective objective(channel, mode);

  using Vec4 = std::array<double, 4>;
  std::vector<Vec4> position(m);
  std::vector<Vec4> velocity(m, Vec4{});
  std::vector<Vec4> personal(m);
  std::vector<double> personal_value(m);
  Vec4 leader{};
  double leader_value = -std::numeric_limits<double>::infinity();
  Incumbent global{DecodingAssignment(num_gps, num_gws)};
  std::vector<double> trace;
  trace.reserve(budget.iterations);

  auto decode = [&](const Vec4& s) {
    return DecodingAssignment(num_gps, num_gws,
                              detail::angle_modulation_bits(s, num_bits));
  };
  auto sweep_leader = [&] {
    for (std::size_t p = 0; p < m; ++p) {
      if (personal_value[p] > leader_value) {
        leader_value = personal_value[p];
        leader = personal[p];
        global.offer(decode(leader), leader_value);
      }
    }
    trace.push_back(global.value);
  };

  for (std::size_t p = 0; p < m; ++p) {
    for (double& s : position[p]) s = rng.uniform(-1.0, 1.0);
    // A zero start velocity would freeze a lone particle on its leader.
    for (double& v : velocity[p]) v = rng.uniform(-params.v_max_ampso, params.v_max_ampso);
    personal[p] = position[p];
    personal_value[p] = objective(decode(position[p]));
  }
  sweep_leader();

  for (std::size_t t = 1; t < budget.iterations; ++t) {
    const Vec4 g = leader;
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t k = 0; k < 4; ++k) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        double& v = velocity[p][k];
        v = params.inertia * v + params.c1 * r1 * (personal[p][k] - position[p][k]) +
            params.c2 * r2 * (g[k] - position[p][k]);
        v = std::clamp(v, -params.v_max_ampso, params.v_max_ampso);
        position[p][k] += v;
      }
      const double value = objective(decode(position[p]));
      if (value > personal_value[p]) {
        personal_value[p] = value;
        personal[p] = position[p];
      }
    }
    sweep_leader();
  }
  return finish(std::move(global), std::move(trace), objective, m, start);
}

// ---------------------------------------------------------------------------
// Ant colony: per-bit pheromone pair (tau_0d, tau_1d).

HeuristicTable build_heuristic(const ChannelMatrix& channel, HeuristicMode mode,
                               double deactivation_percentile,
                               double deactivation_boost) {
  const std::size_t num_gps = channel.num_gps();
  const std::size_t num_gws = channel.num_gws();
  const std::size_t num_bits = num_gps * num_gws;
  HeuristicTable table;
  table.eta[0].assign(num_bits, 1.0);
  table.eta[1].assign(num_bits, 1.0);
  if (mode == HeuristicMode::none) return table;

  require(deactivation_percentile >= 0.0 && deactivation_percentile <= 100.0,
          "heuristic: percentile must lie in [0, 100]");
  require(deactivation_boost > 0.0, "heuristic: deactivation boost must be > 0");

  std::vector<double> column_sum(num_gws, 0.0);
  for (std::size_t j = 0; j < num_gps; ++j) {
    for (std::size_t i = 0; i < num_gws; ++i) column_sum[i] += channel.gain(j, i);
  }
  const double max_sum = *std::max_element(column_sum.begin(), column_sum.end());

  for (std::size_t j = 0; j < num_gps; ++j) {
    for (std::size_t i = 0; i < num_gws; ++i) {
      const std::size_t d = j * num_gws + i;
      const double h = channel.gain(j, i);
      const double others =
          num_gps > 1 ? (column_sum[i] - h) / static_cast<double>(num_gps - 1) : h;
      const double weight = max_sum > 0.0 ? column_sum[i] / max_sum : 1.0;
      table.eta[1][d] = h * weight;
      table.eta[0][d] = others * weight;
    }
  }

  if (mode == HeuristicMode::gp_deactivation) {
    std::vector<double> sorted(channel.gains().begin(), channel.gains().end());
    std::sort(sorted.begin(), sorted.end());
    // Linear-interpolated percentile over all K N gains.
    const double pos = deactivation_percentile / 100.0 *
                       static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double threshold = sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
    for (std::size_t j = 0; j < num_gps; ++j) {
      bool weak = true;
      for (std::size_t i = 0; i < num_gws && weak; ++i) {
        weak = channel.gain(j, i) < threshold;
      }
      if (!weak) continue;
      for (std::size_t i = 0; i < num_gws; ++i) {
        table.eta[0][j * num_gws + i] *= deactivation_boost;
      }
    }
  }
  return table;
}

namespace {

enum class AntVariant { all_ants, best_ant_clamped };

SearchTrace run_ants(const ChannelMatrix& channel, const SearchBudget& budget,
                     const AcoParams& params, EvaluationMode mode,
                     AntVariant variant, const PheromoneObserver& observer) {
  budget.validate();
  require(params.alpha >= 0.0 && params.beta >= 0.0, "aco: alpha, beta must be >= 0");
  require(params.evaporation >= 0.0 && params.evaporation <= 1.0,
          "aco: evaporation must lie in [0, 1]");
  require(params.tau_min < params.tau_max, "aco: tau_min must be < tau_max");

  const auto start = Clock::now();
  const std::size_t num_gps = channel.num_gps();
  const std::size_t num_gws = channel.num_gws();
  const std::size_t num_bits = num_gps * num_gws;
  const std::size_t m = budget.population;
  Rng rng(budget.seed);
  Objective objective(channel, mode);
  const HeuristicTable eta = build_heuristic(channel, params.heuristic,
                                             params.deactivation_percentile,
                                             params.deactivation_boost);

  std::array<std::vector<double>, 2> tau;
  const double tau_init = variant == AntVariant::best_ant_clamped
                              ? std::clamp(params.tau_init, params.tau_min, params.tau_max)
                              : params.tau_init;
  tau[0].assign(num_bits, tau_init);
  tau[1].assign(num_bits, tau_init);

  std::vector<DecodingAssignment> ants(m, DecodingAssignment(num_gps, num_gws));
  std::vector<double> value(m);
  std::vector<double> p_one(num_bits);
  Incumbent global{ants[0]};
  std::vector<double> trace;
  trace.reserve(budget.iterations);

  for (std::size_t t = 0; t < budget.iterations; ++t) {
    for (std::size_t d = 0; d < num_bits; ++d) {
      p_one[d] = detail::choice_probability_one(tau[0][d], tau[1][d], eta.eta[0][d],
                                                eta.eta[1][d], params);
    }
    std::size_t iteration_best = 0;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t d = 0; d < num_bits; ++d) {
        ants[a].set_bit(d, rng.uniform() < p_one[d]);
      }
      value[a] = objective(ants[a]);
      if (value[a] > value[iteration_best]) iteration_best = a;
    }
    for (std::size_t a = 0; a < m; ++a) global.offer(ants[a], value[a]);

    // Deposit: sum-rate relative to the best so far, on the chosen cells.
    auto deposit = [&](std::size_t a) {
      return global.value > 0.0 ? value[a] / global.value : 0.0;
    };
    if (variant == AntVariant::all_ants) {
      std::array<std::vector<double>, 2> added{std::vector<double>(num_bits, 0.0),
                                               std::vector<double>(num_bits, 0.0)};
      for (std::size_t a = 0; a < m; ++a) {
        const double amount = deposit(a);
        for (std::size_t d = 0; d < num_bits; ++d) added[ants[a].bit(d)][d] += amount;
      }
      for (int c = 0; c < 2; ++c) {
        for (std::size_t d = 0; d < num_bits; ++d) {
          tau[c][d] = detail::pheromone_update(tau[c][d], params.evaporation, added[c][d]);
        }
      }
    } else {
      const auto& best_ant = ants[iteration_best];
      const double amount = deposit(iteration_best);
      for (int c = 0; c < 2; ++c) {
        for (std::size_t d = 0; d < num_bits; ++d) {
          const double add = best_ant.bit(d) == (c == 1) ? amount : 0.0;
          tau[c][d] = detail::pheromone_update_clamped(
              tau[c][d], params.evaporation, add, params.tau_min, params.tau_max);
        }
      }
    }
    if (observer) observer(tau[0], tau[1]);
    trace.push_back(global.value);
  }
  return finish(std::move(global), std::move(trace), objective, m, start);
}

}  // namespace

SearchTrace ant_system(const ChannelMatrix& channel, const SearchBudget& budget,
                       const AcoParams& params, EvaluationMode mode,
                       const PheromoneObserver& observer) {
  return run_ants(channel, budget, params, mode, AntVariant::all_ants, observer);
}

SearchTrace max_min_ant_system(const ChannelMatrix& channel,
                               const SearchBudget& budget,
                               const AcoParams& params, EvaluationMode mode,
                               const PheromoneObserver& observer) {
  return run_ants(channel, budget, params, mode, AntVariant::best_ant_clamped, observer);
}

// ---------------------------------------------------------------------------
// Simulated annealing with single-bit-flip moves and restarts. Spends
// M * I evaluations; the trace samples the best-so-far every M evaluations.

SearchTrace simulated_annealing(const ChannelMatrix& channel,
                                const SearchBudget& budget, EvaluationMode mode) {
  budget.validate();
  const auto start = Clock::now();
  const std::size_t num_bits = channel.num_gps() * channel.num_gws();
  const std::size_t stride = budget.population;
  const std::size_t total = budget.population * budget.iterations;
  const double t_max = budget.sa_max_temperature;
  const double t_floor = t_max * detail::kSaFloorRatio;
  Rng rng(budget.seed);
  Objective objective(channel, mode);

  DecodingAssignment current(channel.num_gps(), channel.num_gws());
  Incumbent best{current};
  std::vector<double> trace;
  trace.reserve(budget.iterations);
  double current_value = 0.0;

  auto record = [&] {
    if (objective.evaluations() % stride == 0) trace.push_back(best.value);
  };
  auto start_from = [&] {
    current_value = objective(current);
    best.offer(current, current_value);
    record();
  };
  auto restart = [&] {
    random_bits(rng, current);
    start_from();
  };

  // First descent starts from decode-all; restarts are random.
  current = DecodingAssignment::all_ones(channel.num_gps(), channel.num_gws());
  start_from();
  std::size_t step = 0;
  while (objective.evaluations() < total) {
    const double temperature = detail::sa_temperature(t_max, step);
    if (temperature < t_floor) {
      restart();
      step = 0;
      continue;
    }
    DecodingAssignment candidate = current;
    candidate.flip_bit(rng.below(num_bits));
    const double value = objective(candidate);
    const double delta = value - current_value;
    if (delta > 0.0 ||
        rng.uniform() < detail::sa_acceptance_probability(delta, temperature)) {
      current = std::move(candidate);
      current_value = value;
      best.offer(current, current_value);
    }
    ++step;
    record();
  }
  return finish(std::move(best), std::move(trace), objective, stride, start);
}

}  // namespace geosic
