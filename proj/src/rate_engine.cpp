#include "geosic/rate_engine.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "geosic/error.hpp"
#include "geosic/simplex.hpp"

namespace geosic {

DecodingAssignment::DecodingAssignment(std::size_t num_gps, std::size_t num_gws,
                                       std::vector<std::uint8_t> flags)
    : num_gps_(num_gps), num_gws_(num_gws), flags_(std::move(flags)) {
  require(flags_.size() == num_gps_ * num_gws_,
          "assignment: flag count does not match K x N");
  for (auto f : flags_) require(f <= 1, "assignment: flags must be 0 or 1");
}

std::vector<std::size_t> DecodingAssignment::decoded_set(std::size_t gw) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < num_gps_; ++j) {
    if (decodes(j, gw)) out.push_back(j);
  }
  return out;
}

bool DecodingAssignment::decoded_anywhere(std::size_t gp) const {
  for (std::size_t i = 0; i < num_gws_; ++i) {
    if (decodes(gp, i)) return true;
  }
  return false;
}

OrderPolicy parse_order_policy(std::string_view name) {
  if (name == "fixed-order") return OrderPolicy::descending_gain_corner;
  if (name == "lp") return OrderPolicy::lp_exact;
  fail(ErrorKind::invalid_argument,
       "unknown evaluator '" + std::string(name) + "' (fixed-order|lp)");
}

UndecodedPolicy parse_scenario(int scenario) {
  if (scenario == 1) return UndecodedPolicy::interferes;
  if (scenario == 2) return UndecodedPolicy::silent;
  fail(ErrorKind::invalid_argument,
       "scenario must be 1 or 2, got " + std::to_string(scenario));
}

std::string_view to_string(OrderPolicy policy) {
  return policy == OrderPolicy::lp_exact ? "lp" : "fixed-order";
}

double link_capacity(double signal_power, double gain,
                     double noise_plus_interference) {
  require(signal_power >= 0.0 && gain >= 0.0,
          "link_capacity: power and gain must be >= 0");
  require(noise_plus_interference > 0.0,
          "link_capacity: noise plus interference must be > 0");
  return std::log2(1.0 + signal_power * gain * gain / noise_plus_interference);
}

namespace {

void check_dims(const ChannelMatrix& channel, const DecodingAssignment& f) {
  if (f.num_gps() != channel.num_gps() || f.num_gws() != channel.num_gws()) {
    fail(ErrorKind::invalid_argument,
         "assignment is " + std::to_string(f.num_gps()) + "x" +
             std::to_string(f.num_gws()) + " but channel is " +
             std::to_string(channel.num_gps()) + "x" +
             std::to_string(channel.num_gws()));
  }
}

bool interferes_at(const DecodingAssignment& f, std::size_t gp, std::size_t gw,
                   UndecodedPolicy policy) {
  if (f.decodes(gp, gw)) return false;
  return policy == UndecodedPolicy::interferes || f.decoded_anywhere(gp);
}

// Sum of h^2 over interferers at `gw`, in units of N0/P.
double interference_sq(const ChannelMatrix& channel, const DecodingAssignment& f,
                       std::size_t gw, UndecodedPolicy policy) {
  double s = 0.0;
  for (std::size_t m = 0; m < channel.num_gps(); ++m) {
    if (interferes_at(f, m, gw, policy)) s += channel.gain_sq(m, gw);
  }
  return s;
}

}  // namespace

std::vector<std::size_t> interferers(const ChannelMatrix& channel,
                                     const DecodingAssignment& assignment,
                                     std::size_t gw, UndecodedPolicy policy) {
  check_dims(channel, assignment);
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < channel.num_gps(); ++m) {
    if (interferes_at(assignment, m, gw, policy)) out.push_back(m);
  }
  return out;
}

double subset_capacity(const ChannelMatrix& channel, std::size_t gw,
                       std::span<const std::size_t> subset,
                       std::span<const std::size_t> interfering) {
  double signal = 0.0;
  for (auto j : subset) signal += channel.gain_sq(j, gw);
  double interference = 0.0;
  for (auto m : interfering) interference += channel.gain_sq(m, gw);
  const double scale = channel.snr_scale();
  return std::log2(1.0 + scale * signal / (1.0 + scale * interference));
}

std::vector<double> sic_corner_rates(const ChannelMatrix& channel,
                                     const DecodingAssignment& assignment,
                                     std::size_t gw,
                                     std::span<const std::size_t> permutation,
                                     UndecodedPolicy policy) {
  check_dims(channel, assignment);
  require(gw < channel.num_gws(), "sic_corner_rates: gateway index out of range");
  const auto decoded = assignment.decoded_set(gw);
  std::vector<std::size_t> sorted(permutation.begin(), permutation.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted != decoded) {
    fail(ErrorKind::invalid_argument,
         "sic_corner_rates: permutation is not a bijection on the decoded set "
         "of gateway " + std::to_string(gw));
  }

  const double scale = channel.snr_scale();
  double rest = interference_sq(channel, assignment, gw, policy);
  std::vector<double> rates(permutation.size());
  // Walk from the last decoded geophone backwards, accumulating interference.
  for (std::size_t k = permutation.size(); k-- > 0;) {
    const double h2 = channel.gain_sq(permutation[k], gw);
    rates[k] = std::log2(1.0 + scale * h2 / (1.0 + scale * rest));
    rest += h2;
  }
  return rates;
}

RateVector evaluate_fixed_order(const ChannelMatrix& channel,
                                const DecodingAssignment& assignment,
                                UndecodedPolicy policy) {
  check_dims(channel, assignment);
  const std::size_t num_gps = channel.num_gps();
  const std::size_t num_gws = channel.num_gws();
  const double scale = channel.snr_scale();

  std::vector<std::uint8_t> active(num_gps, 0);
  if (policy == UndecodedPolicy::silent) {
    for (std::size_t j = 0; j < num_gps; ++j) {
      active[j] = assignment.decoded_anywhere(j) ? 1 : 0;
    }
  } else {
    std::fill(active.begin(), active.end(), 1);
  }

  RateVector out;
  out.rates.assign(num_gps, std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> decoded_somewhere(num_gps, 0);
  std::vector<std::size_t> order;
  order.reserve(num_gps);

  for (std::size_t i = 0; i < num_gws; ++i) {
    order.clear();
    double rest = 0.0;
    for (std::size_t j = 0; j < num_gps; ++j) {
      if (assignment.decodes(j, i)) {
        order.push_back(j);
      } else if (active[j]) {
        rest += channel.gain_sq(j, i);
      }
    }
    // Descending gain, ties by lower index first.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double ga = channel.gain(a, i);
      const double gb = channel.gain(b, i);
      return ga != gb ? ga > gb : a < b;
    });
    for (std::size_t k = order.size(); k-- > 0;) {
      const std::size_t j = order[k];
      const double h2 = channel.gain_sq(j, i);
      const double r = std::log2(1.0 + scale * h2 / (1.0 + scale * rest));
      out.rates[j] = std::min(out.rates[j], r);
      decoded_somewhere[j] = 1;
      rest += h2;
    }
  }

  out.sum_rate = 0.0;
  for (std::size_t j = 0; j < num_gps; ++j) {
    if (!decoded_somewhere[j]) out.rates[j] = 0.0;
    out.sum_rate += out.rates[j];
  }
  return out;
}

namespace {

// Per-gateway data for the LP: decoded geophones (as LP variable indices),
// their gains, and the interference floor.
struct GatewayBlock {
  std::vector<std::size_t> vars;
  std::vector<double> snr;  // P h^2 / (N0 + P I) for each decoded geophone
};

double block_capacity(const GatewayBlock& block, std::uint64_t mask) {
  double s = 0.0;
  for (std::size_t b = 0; b < block.vars.size(); ++b) {
    if (mask >> b & 1u) s += block.snr[b];
  }
  return std::log2(1.0 + s);
}

// Most violated subset of one gateway's polymatroid at `x`, by Gray-code
// enumeration. Returns {mask, violation}.
std::pair<std::uint64_t, double> most_violated(const GatewayBlock& block,
                                               std::span<const double> x) {
  const std::size_t n = block.vars.size();
  std::uint64_t best_mask = 0;
  double best_violation = 0.0;
  double snr_sum = 0.0;
  double rate_sum = 0.0;
  std::uint64_t gray = 0;
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < count; ++k) {
    const unsigned b = static_cast<unsigned>(std::countr_zero(k));
    gray ^= std::uint64_t{1} << b;
    const double sign = (gray >> b & 1u) ? 1.0 : -1.0;
    snr_sum += sign * block.snr[b];
    rate_sum += sign * x[block.vars[b]];
    const double violation = rate_sum - std::log2(1.0 + std::max(0.0, snr_sum));
    if (violation > best_violation) {
      best_violation = violation;
      best_mask = gray;
    }
  }
  return {best_mask, best_violation};
}

}  // namespace

RateVector evaluate_lp(const ChannelMatrix& channel,
                       const DecodingAssignment& assignment,
                       UndecodedPolicy policy) {
  check_dims(channel, assignment);
  const std::size_t num_gps = channel.num_gps();
  const std::size_t num_gws = channel.num_gws();
  const double scale = channel.snr_scale();

  // LP variables are the geophones decoded by at least one gateway.
  std::vector<std::size_t> var_of(num_gps, num_gps);
  std::vector<std::size_t> gp_of;
  for (std::size_t j = 0; j < num_gps; ++j) {
    if (assignment.decoded_anywhere(j)) {
      var_of[j] = gp_of.size();
      gp_of.push_back(j);
    }
  }
  RateVector out;
  out.rates.assign(num_gps, 0.0);
  if (gp_of.empty()) return out;

  std::vector<GatewayBlock> blocks;
  for (std::size_t i = 0; i < num_gws; ++i) {
    GatewayBlock block;
    const double floor = 1.0 + scale * interference_sq(channel, assignment, i, policy);
    for (std::size_t j = 0; j < num_gps; ++j) {
      if (assignment.decodes(j, i)) {
        block.vars.push_back(var_of[j]);
        block.snr.push_back(scale * channel.gain_sq(j, i) / floor);
      }
    }
    if (block.vars.size() > kMaxLpDecodedSet) {
      fail(ErrorKind::capacity,
           "evaluate_lp: gateway " + std::to_string(i) + " decodes " +
               std::to_string(block.vars.size()) + " geophones; the limit is " +
               std::to_string(kMaxLpDecodedSet) + " (use the fixed-order evaluator)");
    }
    if (!block.vars.empty()) blocks.push_back(std::move(block));
  }

  lp::PackingProblem problem;
  problem.num_vars = gp_of.size();
  problem.objective.assign(gp_of.size(), 1.0);
  std::vector<std::set<std::uint64_t>> added(blocks.size());
  auto add_row = [&](std::size_t b, std::uint64_t mask) {
    if (!added[b].insert(mask).second) return false;
    std::vector<double> row(problem.num_vars, 0.0);
    for (std::size_t k = 0; k < blocks[b].vars.size(); ++k) {
      if (mask >> k & 1u) row[blocks[b].vars[k]] = 1.0;
    }
    problem.rows.push_back(std::move(row));
    problem.rhs.push_back(block_capacity(blocks[b], mask));
    return true;
  };
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::size_t n = blocks[b].vars.size();
    for (std::size_t k = 0; k < n; ++k) add_row(b, std::uint64_t{1} << k);
    add_row(b, (std::uint64_t{1} << n) - 1);
  }

  // Cutting planes: add the most violated subset constraint of each gateway
  // until the LP optimum satisfies all of them.
  lp::Solution sol;
  for (std::size_t round = 0;; ++round) {
    sol = lp::maximize_packing(problem);
    bool grew = false;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      auto [mask, violation] = most_violated(blocks[b], sol.x);
      if (violation > 1e-11) grew |= add_row(b, mask);
    }
    if (!grew) break;
    if (round > 100000) fail(ErrorKind::internal, "evaluate_lp: no convergence");
  }

  out.sum_rate = 0.0;
  for (std::size_t v = 0; v < gp_of.size(); ++v) {
    out.rates[gp_of[v]] = sol.x[v];
    out.sum_rate += sol.x[v];
  }
  return out;
}

RateVector evaluate(const ChannelMatrix& channel,
                    const DecodingAssignment& assignment, EvaluationMode mode) {
  return mode.order == OrderPolicy::lp_exact
             ? evaluate_lp(channel, assignment, mode.undecoded)
             : evaluate_fixed_order(channel, assignment, mode.undecoded);
}

double max_constraint_violation(const ChannelMatrix& channel,
                                const DecodingAssignment& assignment,
                                std::span<const double> rates,
                                UndecodedPolicy policy) {
  check_dims(channel, assignment);
  require(rates.size() == channel.num_gps(), "rate vector size mismatch");
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < channel.num_gps(); ++j) {
    worst = std::max(worst, -rates[j]);
    if (!assignment.decoded_anywhere(j)) worst = std::max(worst, rates[j]);
  }
  for (std::size_t i = 0; i < channel.num_gws(); ++i) {
    const auto decoded = assignment.decoded_set(i);
    const auto noise = interferers(channel, assignment, i, policy);
    require(decoded.size() <= 24, "max_constraint_violation: decoded set too large");
    std::vector<std::size_t> subset;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << decoded.size()); ++mask) {
      subset.clear();
      double lhs = 0.0;
      for (std::size_t k = 0; k < decoded.size(); ++k) {
        if (mask >> k & 1u) {
          subset.push_back(decoded[k]);
          lhs += rates[decoded[k]];
        }
      }
      worst = std::max(worst, lhs - subset_capacity(channel, i, subset, noise));
    }
  }
  return worst;
}

boost::multiprecision::cpp_int search_space_size(unsigned num_gps,
                                                 unsigned num_gws) {
  using boost::multiprecision::cpp_int;
  // sum_{i=0}^{K} C(K, i), accumulated with the exact recurrence
  // C(K, i+1) = C(K, i) (K - i) / (i + 1).
  cpp_int binom = 1;
  cpp_int per_gateway = 0;
  for (unsigned i = 0; i <= num_gps; ++i) {
    per_gateway += binom;
    binom = binom * (num_gps - i) / (i + 1);
  }
  return boost::multiprecision::pow(per_gateway, num_gws);
}

}  // namespace geosic
