#include <algorithm>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "geosic/error.hpp"
#include "geosic/network_model.hpp"
#include "geosic/rate_engine.hpp"
#include "support/oracles.hpp"
#include "support/property.hpp"

using namespace geosic;
using doctest::Approx;

namespace {

ChannelMatrix example() {
  const Power mw = Power::from_milliwatts(1.0);
  return ChannelMatrix(3, 2, {3.023, 1.133, 1.738, 2.168, 0.542, 0.896}, mw, mw);
}

DecodingAssignment flags(std::size_t k, std::size_t n, std::vector<std::uint8_t> bits) {
  return DecodingAssignment(k, n, std::move(bits));
}

oracle::Matrix as_matrix(const ChannelMatrix& ch) {
  oracle::Matrix h(ch.num_gps(), std::vector<double>(ch.num_gws()));
  for (std::size_t j = 0; j < ch.num_gps(); ++j) {
    for (std::size_t i = 0; i < ch.num_gws(); ++i) h[j][i] = ch.gain(j, i);
  }
  return h;
}

oracle::Flags as_flags(const DecodingAssignment& f) {
  oracle::Flags out(f.num_gps(), std::vector<int>(f.num_gws()));
  for (std::size_t j = 0; j < f.num_gps(); ++j) {
    for (std::size_t i = 0; i < f.num_gws(); ++i) out[j][i] = f.decodes(j, i);
  }
  return out;
}

struct RandomCase {
  ChannelMatrix channel;
  DecodingAssignment assignment;
  UndecodedPolicy policy;
};

RandomCase random_case(Rng& rng, std::size_t max_k, std::size_t max_n) {
  const std::size_t k = prop::between(rng, 1, max_k), n = prop::between(rng, 1, max_n);
  const double snr = std::pow(10.0, rng.uniform(-1.0, 2.0));
  auto ch = generate_rayleigh(k, n, Power::from_milliwatts(snr), Power::from_milliwatts(1.0),
                              RngSeed{rng.below(1u << 30)});
  DecodingAssignment f(k, n);
  for (std::size_t d = 0; d < k * n; ++d) f.set_bit(d, rng.bernoulli(0.6));
  return {std::move(ch), std::move(f),
          rng.bernoulli(0.5) ? UndecodedPolicy::interferes : UndecodedPolicy::silent};
}

}  // namespace

TEST_SUITE("rate_engine") {

TEST_CASE("link_capacity") {
  CHECK(link_capacity(1.0, 0.0, 1.0) == 0.0);
  CHECK(link_capacity(1.0, 0.896, 1.0) == Approx(0.850).epsilon(1e-3));
  CHECK(link_capacity(1.0, 3.023, 1.0) == Approx(3.342).epsilon(1e-3));
  CHECK_THROWS_AS(link_capacity(1.0, 1.0, 0.0), Error);
  CHECK_THROWS_AS(link_capacity(-1.0, 1.0, 1.0), Error);
}

TEST_CASE("SIC corner at GW1 for decode-all, natural order") {
  const auto ch = example();
  const auto all = DecodingAssignment::all_ones(3, 2);
  const std::vector<std::size_t> perm{0, 1, 2};
  const auto r = sic_corner_rates(ch, all, 0, perm, UndecodedPolicy::interferes);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == Approx(1.640).epsilon(1e-3));
  CHECK(r[1] == Approx(1.738).epsilon(1e-3));
  CHECK(r[2] == Approx(0.372).epsilon(1e-3));
}

TEST_CASE("SIC corner with GP2 decoded before GP1 and GP3 interfering") {
  const auto ch = example();
  const auto f = flags(3, 2, {1, 0, 1, 1, 0, 1});
  const std::vector<std::size_t> perm{1, 0};
  const auto r = sic_corner_rates(ch, f, 0, perm, UndecodedPolicy::interferes);
  REQUIRE(r.size() == 2);
  CHECK(std::abs(r[1] - 3.010) < 1.5e-3);
}

TEST_CASE("SIC corner edge cases") {
  const auto ch = example();
  const auto none = DecodingAssignment::zeros(3, 2);
  CHECK(sic_corner_rates(ch, none, 0, {}, UndecodedPolicy::interferes).empty());
  const auto all = DecodingAssignment::all_ones(3, 2);
  const std::vector<std::size_t> short_perm{0, 1};
  const std::vector<std::size_t> repeated{0, 0, 1};
  CHECK_THROWS_AS(sic_corner_rates(ch, all, 0, short_perm, UndecodedPolicy::interferes), Error);
  CHECK_THROWS_AS(sic_corner_rates(ch, all, 0, repeated, UndecodedPolicy::interferes), Error);
}

TEST_CASE("fixed-order decode-all on the example") {
  const auto r = evaluate_fixed_order(example(), DecodingAssignment::all_ones(3, 2),
                                      UndecodedPolicy::interferes);
  CHECK(r.rates[0] == Approx(0.7757).epsilon(1e-3));
  CHECK(r.rates[1] == Approx(1.3350).epsilon(1e-3));
  CHECK(r.rates[2] == Approx(0.3716).epsilon(1e-3));
  CHECK(r.sum_rate == Approx(2.48234).epsilon(1e-5));
}

TEST_CASE("fixed-order trivial cases") {
  const auto ch = example();
  const auto zero = evaluate_fixed_order(ch, DecodingAssignment::zeros(3, 2),
                                         UndecodedPolicy::interferes);
  CHECK(zero.sum_rate == 0.0);
  for (double r : zero.rates) CHECK(r == 0.0);

  const Power mw = Power::from_milliwatts(1.0);
  const ChannelMatrix single(1, 1, {1.7}, mw, mw);
  const auto one = evaluate_fixed_order(single, DecodingAssignment::all_ones(1, 1),
                                        UndecodedPolicy::interferes);
  CHECK(one.sum_rate == Approx(link_capacity(1.0, 1.7, 1.0)));
}

TEST_CASE("fixed-order ties are broken by geophone index") {
  const Power mw = Power::from_milliwatts(1.0);
  const ChannelMatrix tie(2, 1, {1.0, 1.0}, mw, mw);
  const auto r = evaluate_fixed_order(tie, DecodingAssignment::all_ones(2, 1),
                                      UndecodedPolicy::interferes);
  // GP1 is decoded first and sees GP2.
  CHECK(r.rates[0] == Approx(std::log2(1.5)));
  CHECK(r.rates[1] == Approx(1.0));
}

TEST_CASE("LP optimum on the example's best assignment") {
  const auto f = flags(3, 2, {1, 0, 1, 1, 0, 1});
  const auto r = evaluate_lp(example(), f, UndecodedPolicy::interferes);
  CHECK(r.sum_rate == Approx(3.812882727).epsilon(1e-9));
  CHECK(max_constraint_violation(example(), f, r.rates, UndecodedPolicy::interferes) <= 1e-9);
  for (double x : r.rates) CHECK(x >= -1e-12);
}

TEST_CASE("LP optimum on decode-all matches vertex enumeration and its bounds") {
  const auto ch = example();
  const auto all = DecodingAssignment::all_ones(3, 2);
  const auto r = evaluate_lp(ch, all, UndecodedPolicy::interferes);
  const auto lp = oracle::rate_constraints(as_matrix(ch), 1.0, as_flags(all), false);
  const double brute = oracle::max_sum_by_vertices(lp, 3);
  CHECK(brute == Approx(2.961017417309).epsilon(1e-10));
  CHECK(r.sum_rate == Approx(brute).epsilon(1e-9));

  // Bounds: at least the best min-across-gateway corner sum, at most the
  // smallest full-set capacity.
  std::vector<std::size_t> p1{0, 1, 2};
  double best_corner = 0.0;
  do {
    std::vector<std::size_t> p2{0, 1, 2};
    do {
      const auto a = sic_corner_rates(ch, all, 0, p1, UndecodedPolicy::interferes);
      const auto b = sic_corner_rates(ch, all, 1, p2, UndecodedPolicy::interferes);
      std::vector<double> ra(3), rb(3);
      for (std::size_t k = 0; k < 3; ++k) ra[p1[k]] = a[k], rb[p2[k]] = b[k];
      double s = 0.0;
      for (std::size_t j = 0; j < 3; ++j) s += std::min(ra[j], rb[j]);
      best_corner = std::max(best_corner, s);
    } while (std::next_permutation(p2.begin(), p2.end()));
  } while (std::next_permutation(p1.begin(), p1.end()));
  const std::vector<std::size_t> everyone{0, 1, 2};
  const double cap = std::min(subset_capacity(ch, 0, everyone, {}),
                              subset_capacity(ch, 1, everyone, {}));
  CHECK(r.sum_rate >= best_corner - 1e-9);
  CHECK(r.sum_rate <= cap + 1e-9);
}

TEST_CASE("LP trivial and guard cases") {
  CHECK(evaluate_lp(example(), DecodingAssignment::zeros(3, 2), UndecodedPolicy::interferes)
            .sum_rate == 0.0);
  const Power mw = Power::from_milliwatts(1.0);
  const auto big = generate_rayleigh(kMaxLpDecodedSet + 1, 1, mw, mw, RngSeed{5});
  try {
    evaluate_lp(big, DecodingAssignment::all_ones(kMaxLpDecodedSet + 1, 1),
                UndecodedPolicy::interferes);
    FAIL("expected a capacity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::capacity);
  }
}

TEST_CASE("search space size") {
  CHECK(search_space_size(3, 2) == 64);
  CHECK(search_space_size(1, 1) == 2);
  CHECK(search_space_size(0, 0) == 1);
  CHECK(search_space_size(30, 5).str() == "1427247692705959881058285969449495136382746624");
}

TEST_CASE("evaluator and scenario names") {
  CHECK(parse_order_policy("fixed-order") == OrderPolicy::descending_gain_corner);
  CHECK(parse_order_policy("lp") == OrderPolicy::lp_exact);
  CHECK_THROWS_AS(parse_order_policy("simplex"), Error);
  CHECK(parse_scenario(1) == UndecodedPolicy::interferes);
  CHECK(parse_scenario(2) == UndecodedPolicy::silent);
  CHECK_THROWS_AS(parse_scenario(3), Error);
}

}  // TEST_SUITE

TEST_SUITE("properties") {

TEST_CASE("property: fixed-order rates match an independent SIC computation") {
  prop::for_all(201, [](Rng& rng) { return random_case(rng, 8, 4); },
                [](const RandomCase& c) {
                  const auto r = evaluate_fixed_order(c.channel, c.assignment, c.policy);
                  const auto expect = oracle::fixed_order_rates(
                      as_matrix(c.channel), c.channel.snr_scale(), as_flags(c.assignment),
                      c.policy == UndecodedPolicy::silent);
                  for (std::size_t j = 0; j < expect.size(); ++j) {
                    CHECK(r.rates[j] == Approx(expect[j]).epsilon(1e-12));
                  }
                });
}

TEST_CASE("property: LP optimum matches brute-force vertex enumeration") {
  prop::for_all(202, [](Rng& rng) { return random_case(rng, 3, 2); },
                [](const RandomCase& c) {
                  const auto lp = oracle::rate_constraints(
                      as_matrix(c.channel), c.channel.snr_scale(), as_flags(c.assignment),
                      c.policy == UndecodedPolicy::silent);
                  const double brute = oracle::max_sum_by_vertices(lp, c.channel.num_gps());
                  const double got = evaluate_lp(c.channel, c.assignment, c.policy).sum_rate;
                  CHECK(got == Approx(brute).epsilon(1e-9));
                });
}

TEST_CASE("property: removing an interferer never lowers a corner bound") {
  prop::for_all(
      203, [](Rng& rng) { return std::pair{random_case(rng, 7, 3), rng.below(1000)}; },
      [](const auto& in) {
        const RandomCase& c = in.first;
        const std::size_t gw = in.second % c.channel.num_gws();
        const auto ifs = interferers(c.channel, c.assignment, gw, c.policy);
        if (ifs.empty()) return;
        const std::size_t victim = ifs[in.second % ifs.size()];
        std::vector<double> gains(c.channel.gains().begin(), c.channel.gains().end());
        gains[victim * c.channel.num_gws() + gw] = 0.0;
        const ChannelMatrix quieter(c.channel.num_gps(), c.channel.num_gws(), gains,
                                    c.channel.gp_power(), c.channel.noise_power());
        auto perm = c.assignment.decoded_set(gw);
        const auto before = sic_corner_rates(c.channel, c.assignment, gw, perm, c.policy);
        const auto after = sic_corner_rates(quieter, c.assignment, gw, perm, c.policy);
        for (std::size_t k = 0; k < before.size(); ++k) CHECK(after[k] >= before[k] - 1e-12);
      });
}

TEST_CASE("property: scaled-down LP rates stay feasible") {
  prop::for_all(
      204,
      [](Rng& rng) {
        auto c = random_case(rng, 6, 3);
        std::vector<double> scale(c.channel.num_gps());
        for (double& s : scale) s = rng.uniform();
        return std::pair{std::move(c), std::move(scale)};
      },
      [](const auto& in) {
        const RandomCase& c = in.first;
        auto r = evaluate_lp(c.channel, c.assignment, c.policy).rates;
        for (std::size_t j = 0; j < r.size(); ++j) r[j] *= in.second[j];
        CHECK(max_constraint_violation(c.channel, c.assignment, r, c.policy) <= 1e-9);
      });
}

TEST_CASE("property: LP sum dominates the fixed-order sum") {
  prop::for_all(205, [](Rng& rng) { return random_case(rng, 8, 3); },
                [](const RandomCase& c) {
                  const double lp = evaluate_lp(c.channel, c.assignment, c.policy).sum_rate;
                  const double fo =
                      evaluate_fixed_order(c.channel, c.assignment, c.policy).sum_rate;
                  CHECK(lp >= fo - 1e-9);
                });
}

TEST_CASE("property: fixed-order rates satisfy every subset constraint") {
  prop::for_all(206, [](Rng& rng) { return random_case(rng, 8, 4); },
                [](const RandomCase& c) {
                  const auto r = evaluate_fixed_order(c.channel, c.assignment, c.policy);
                  CHECK(max_constraint_violation(c.channel, c.assignment, r.rates, c.policy) <=
                        1e-9);
                });
}

TEST_CASE("property: search space size is 2^(K N) for K, N <= 64") {
  std::size_t cases = 0;
  for (unsigned k = 0; k <= 64; ++k) {
    for (unsigned n = 0; n <= 64; ++n) {
      boost::multiprecision::cpp_int expect = 1;
      expect <<= k * n;
      CHECK(search_space_size(k, n) == expect);
      ++cases;
    }
  }
  CHECK(cases >= prop::kCases);
}

TEST_CASE("property: both scenarios agree when every gateway decodes everyone") {
  prop::for_all(207, [](Rng& rng) { return random_case(rng, 8, 3); },
                [](const RandomCase& c) {
                  const auto all =
                      DecodingAssignment::all_ones(c.channel.num_gps(), c.channel.num_gws());
                  for (auto order : {OrderPolicy::descending_gain_corner, OrderPolicy::lp_exact}) {
                    const auto a = evaluate(c.channel, all, {order, UndecodedPolicy::interferes});
                    const auto b = evaluate(c.channel, all, {order, UndecodedPolicy::silent});
                    CHECK(a.rates == b.rates);
                  }
                });
}

}  // TEST_SUITE
