#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <doctest.h>

#include "geosic/decode_search.hpp"
#include "geosic/error.hpp"
#include "support/property.hpp"

using namespace geosic;
using doctest::Approx;

namespace {

ChannelMatrix example() {
  const Power mw = Power::from_milliwatts(1.0);
  return ChannelMatrix(3, 2, {3.023, 1.133, 1.738, 2.168, 0.542, 0.896}, mw, mw);
}

constexpr EvaluationMode kLp{OrderPolicy::lp_exact, UndecodedPolicy::interferes};
constexpr EvaluationMode kFixed{OrderPolicy::descending_gain_corner,
                                UndecodedPolicy::interferes};

using Runner = std::function<SearchTrace(const ChannelMatrix&, const SearchBudget&,
                                         EvaluationMode)>;

const std::array<std::pair<const char*, Runner>, 5>& metaheuristics() {
  static const std::array<std::pair<const char*, Runner>, 5> all{{
      {"dpso", [](auto& c, auto& b, auto m) { return dpso(c, b, PsoParams{}, m); }},
      {"ampso", [](auto& c, auto& b, auto m) { return ampso(c, b, PsoParams{}, m); }},
      {"as", [](auto& c, auto& b, auto m) { return ant_system(c, b, AcoParams{}, m); }},
      {"mmas",
       [](auto& c, auto& b, auto m) { return max_min_ant_system(c, b, AcoParams{}, m); }},
      {"sa", [](auto& c, auto& b, auto m) { return simulated_annealing(c, b, m); }},
  }};
  return all;
}

struct SmallCase {
  ChannelMatrix channel;
  SearchBudget budget;
  EvaluationMode mode;
};

SmallCase small_case(Rng& rng) {
  const std::size_t k = prop::between(rng, 1, 4), n = prop::between(rng, 1, 2);
  const Power mw = Power::from_milliwatts(1.0);
  auto ch = generate_rayleigh(k, n, Power::from_milliwatts(rng.uniform(0.5, 20.0)), mw,
                              RngSeed{rng.below(1u << 30)});
  const auto budget = SearchBudget::make(prop::between(rng, 1, 5), prop::between(rng, 1, 8),
                                         rng.below(1u << 30));
  const EvaluationMode mode{rng.bernoulli(0.5) ? OrderPolicy::lp_exact
                                               : OrderPolicy::descending_gain_corner,
                            rng.bernoulli(0.5) ? UndecodedPolicy::interferes
                                               : UndecodedPolicy::silent};
  return {std::move(ch), budget, mode};
}

}  // namespace

TEST_SUITE("decode_search") {

TEST_CASE("sigmoid") {
  CHECK(detail::sigmoid(0.0) == 0.5);
  CHECK(detail::sigmoid(6.0) == Approx(0.99753).epsilon(1e-5));
}

TEST_CASE("angle-modulation bit extraction") {
  const std::array<double, 4> wave{0.0, 1.0, 1.0, 0.0};
  CHECK(detail::angle_modulation(0.0, 1.0, 1.0, 0.0, 0.0) == 0.0);
  CHECK(detail::angle_modulation_bits(wave, 6)[0] == 1);
  const std::array<double, 4> constant{0.0, 0.0, 0.0, 1.0};
  for (auto b : detail::angle_modulation_bits(constant, 16)) CHECK(b == 1);
}

TEST_CASE("pheromone update and choice probability") {
  CHECK(detail::pheromone_update(2.5, 0.0, 1.25) == 3.75);
  CHECK(detail::pheromone_update(2.0, 0.1, 0.0) == Approx(1.8));
  CHECK(detail::pheromone_update_clamped(7.0, 0.0, 2.0, -7.0, 7.0) == 7.0);
  CHECK(detail::pheromone_update_clamped(-6.5, 0.1, -2.0, -7.0, 7.0) == -7.0);
  AcoParams p;
  CHECK(detail::choice_probability_one(0.0, 0.0, 1.0, 1.0, p) == Approx(0.5));
  CHECK(detail::choice_probability_one(3.0, 3.0, 0.4, 0.4, p) == Approx(0.5));
  // The shift keeps the floor value a valid, near-zero weight.
  CHECK(detail::choice_probability_one(5.0, -7.0, 1.0, 1.0, p) < 1e-6);
}

TEST_CASE("annealing acceptance and schedule") {
  CHECK(detail::sa_acceptance_probability(0.5, 3.0) == 1.0);
  CHECK(detail::sa_acceptance_probability(-2.0, 2.0) == Approx(std::exp(-1.0)));
  CHECK(detail::sa_acceptance_probability(-2.0, 2.0) == Approx(0.3679).epsilon(1e-4));
  CHECK(detail::sa_temperature(600.0, 0) == 600.0);
  CHECK(detail::sa_temperature(600.0, 2) == Approx(600.0 * 0.95 * 0.95));
}

TEST_CASE("heuristic table") {
  const auto ch = example();
  const auto none = build_heuristic(ch, HeuristicMode::none);
  for (int c = 0; c < 2; ++c) {
    for (double x : none.eta[c]) CHECK(x == 1.0);
  }
  const Power mw = Power::from_milliwatts(1.0);
  const ChannelMatrix two(2, 1, {2.0, 1.0}, mw, mw);
  const auto avg = build_heuristic(two, HeuristicMode::gw_average);
  CHECK(avg.eta[1][0] == 2.0);
  CHECK(avg.eta[0][0] == 1.0);
  CHECK(parse_heuristic_mode("gp-deactivation") == HeuristicMode::gp_deactivation);
  CHECK_THROWS_AS(parse_heuristic_mode("greedy"), Error);
}

TEST_CASE("deactivation boosts the off outcome of a uniformly weak geophone") {
  const Power mw = Power::from_milliwatts(1.0);
  const ChannelMatrix ch(4, 2, {2.0, 2.1, 1.5, 1.7, 0.1, 0.2, 1.9, 1.2}, mw, mw);
  const auto avg = build_heuristic(ch, HeuristicMode::gw_average);
  const auto off = build_heuristic(ch, HeuristicMode::gp_deactivation, 25.0, 4.0);
  CHECK(off.eta[0][4] == Approx(4.0 * avg.eta[0][4]));
  CHECK(off.eta[0][5] == Approx(4.0 * avg.eta[0][5]));
  CHECK(off.eta[0][0] == avg.eta[0][0]);
  CHECK(off.eta[1] == avg.eta[1]);
}

TEST_CASE("exhaustive search finds the example optimum uniquely") {
  const auto ch = example();
  const auto es = exhaustive_search(ch, kLp);
  CHECK(es.sum_rate == Approx(3.812882727).epsilon(1e-9));
  CHECK(es.assignment == DecodingAssignment(3, 2, {1, 0, 1, 1, 0, 1}));
  CHECK(es.evaluations == 64);
  std::size_t at_max = 0;
  for (unsigned mask = 0; mask < 64; ++mask) {
    DecodingAssignment f(3, 2);
    for (std::size_t d = 0; d < 6; ++d) f.set_bit(d, (mask >> d) & 1u);
    if (evaluate(ch, f, kLp).sum_rate > es.sum_rate - 1e-9) ++at_max;
  }
  CHECK(at_max == 1);
}

TEST_CASE("exhaustive search with the fixed-order evaluator is the enumerated maximum") {
  const auto ch = example();
  double best = 0.0;
  for (unsigned mask = 0; mask < 64; ++mask) {
    DecodingAssignment f(3, 2);
    for (std::size_t d = 0; d < 6; ++d) f.set_bit(d, (mask >> d) & 1u);
    best = std::max(best, evaluate(ch, f, kFixed).sum_rate);
  }
  CHECK(exhaustive_search(ch, kFixed).sum_rate == best);
}

TEST_CASE("exhaustive search edge cases") {
  const Power mw = Power::from_milliwatts(1.0);
  const ChannelMatrix on(1, 1, {0.7}, mw, mw);
  CHECK(exhaustive_search(on, kFixed).assignment.bit(0));
  const ChannelMatrix off(1, 1, {0.0}, mw, mw);
  CHECK_FALSE(exhaustive_search(off, kFixed).assignment.bit(0));
  const auto big = generate_rayleigh(13, 2, mw, mw, RngSeed{1});
  try {
    exhaustive_search(big, kFixed);
    FAIL("expected a capacity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::capacity);
  }
}

TEST_CASE("decode-all baseline") {
  CHECK(no_optimization_baseline(example(), UndecodedPolicy::interferes).sum_rate ==
        Approx(2.483).epsilon(1e-3));
  const Power mw = Power::from_milliwatts(1.0);
  const ChannelMatrix zero(3, 2, std::vector<double>(6, 0.0), mw, mw);
  CHECK(no_optimization_baseline(zero, UndecodedPolicy::interferes).sum_rate == 0.0);
  const ChannelMatrix single(1, 1, {1.3}, mw, mw);
  CHECK(no_optimization_baseline(single, UndecodedPolicy::silent).sum_rate ==
        Approx(std::log2(1.0 + 1.69)));
}

TEST_CASE("budget validation") {
  CHECK_THROWS_AS(SearchBudget::make(0, 5, 1).validate(), Error);
  CHECK_THROWS_AS(SearchBudget::make(5, 0, 1).validate(), Error);
  CHECK_THROWS_AS(dpso(example(), SearchBudget::make(0, 5, 1), {}, kFixed), Error);
}

TEST_CASE("DPSO on the example reaches the LP optimum on average") {
  const auto ch = example();
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    total += dpso(ch, SearchBudget::make(30, 30, seed), PsoParams{}, kLp).best_sum_rate;
  }
  CHECK(total / 100.0 >= 0.98 * 3.812882727);
}

}  // TEST_SUITE

TEST_SUITE("properties") {

TEST_CASE("property: search results are consistent, bounded by ES, and budgeted") {
  prop::for_all(301, small_case, [](const SmallCase& c) {
    const double optimum = exhaustive_search(c.channel, c.mode).sum_rate;
    const std::size_t budget = c.budget.population * c.budget.iterations;
    for (const auto& [name, run] : metaheuristics()) {
      INFO("algorithm " << name);
      const auto t = run(c.channel, c.budget, c.mode);
      CHECK(t.best.num_gps() == c.channel.num_gps());
      CHECK(t.best.num_gws() == c.channel.num_gws());
      for (auto b : t.best.flags()) CHECK(b <= 1);
      CHECK(t.best_sum_rate == evaluate(c.channel, t.best, c.mode).sum_rate);
      CHECK(t.best_sum_rate <= optimum + 1e-12);
      CHECK(t.evaluations <= budget);
      REQUIRE(t.best_per_iteration.size() == c.budget.iterations);
      for (std::size_t k = 1; k < t.best_per_iteration.size(); ++k) {
        CHECK(t.best_per_iteration[k] >= t.best_per_iteration[k - 1]);
      }
      CHECK(t.best_per_iteration.back() == t.best_sum_rate);
    }
  });
}

TEST_CASE("property: a fixed seed reproduces the whole trace") {
  prop::for_all(302, small_case, [](const SmallCase& c) {
    for (const auto& [name, run] : metaheuristics()) {
      INFO("algorithm " << name);
      const auto a = run(c.channel, c.budget, c.mode);
      const auto b = run(c.channel, c.budget, c.mode);
      CHECK(a.best_per_iteration == b.best_per_iteration);
      CHECK(a.best == b.best);
      CHECK(a.evaluations == b.evaluations);
    }
  });
}

TEST_CASE("property: MMAS pheromones stay within their bounds") {
  prop::for_all(303, small_case, [](const SmallCase& c) {
    AcoParams p;
    p.evaporation = 0.5;  // fast evaporation drives values towards the bounds
    std::size_t updates = 0;
    max_min_ant_system(c.channel, c.budget, p, c.mode,
                       [&](std::span<const double> t0, std::span<const double> t1) {
                         ++updates;
                         for (double x : t0) CHECK((x >= p.tau_min && x <= p.tau_max));
                         for (double x : t1) CHECK((x >= p.tau_min && x <= p.tau_max));
                       });
    CHECK(updates == c.budget.iterations);
  });
}

}  // TEST_SUITE
