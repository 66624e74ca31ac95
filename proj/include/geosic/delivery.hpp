#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "geosic/network_model.hpp"

namespace geosic {

struct PowerAllocation {
  std::vector<Power> powers;
  Power total;

  static PowerAllocation from_watts(std::span<const double> watts);
  std::vector<double> watts() const;
};

/// Gateway indices, first element decoded first by the data center.
using DecodingOrder = std::vector<std::size_t>;

struct TimeShareEntry {
  DecodingOrder order;
  double fraction = 0.0;
};

struct TimeShareSchedule {
  std::vector<TimeShareEntry> entries;
  std::size_t flips = 0;  // orders reversed because of a negative fraction
};

struct MinTotalSolution {
  PowerAllocation allocation;
  DecodingOrder order;
};

struct MinMaxSolution {
  PowerAllocation allocation;
  Power max_power;
};

struct WeightedRateSolution {
  PowerAllocation allocation;
  std::vector<double> rates;
  std::vector<double> weights;
  DecodingOrder order;                  // active gateways only
  std::vector<std::size_t> off_set;     // gateways with zero power
  double objective = 0.0;               // sum_i w_i R_i
};

struct ConvexOptions {
  double gap_tolerance = 1e-11;  // relative duality-gap target
  double barrier_growth = 8.0;
  std::size_t max_newton_steps = 200;
};

/// Minimum total power to drain all queues. Gateways are decoded by
/// decreasing gain; each power makes its suffix constraint bind.
MinTotalSolution min_total_power_closed_form(const GatewayState& gateways);

/// Same problem solved numerically over every subset constraint with a
/// log-barrier Newton method in the power variables.
PowerAllocation min_total_power_convex(const GatewayState& gateways,
                                       const ConvexOptions& options = {});

/// Minimizes the largest gateway power. The optimum is
/// t* = max_S N0 (2^{Q(S)} - 1) / sum_{i in S} g_i^2 and every active
/// gateway transmits at t*.
MinMaxSolution min_max_power(const GatewayState& gateways);

/// Rates of the SIC corner for `order` at the given powers.
std::vector<double> corner_rates(const GatewayState& gateways,
                                 std::span<const Power> powers,
                                 const DecodingOrder& order);

/// The N cyclic shifts of (0, 1, ..., N-1).
std::vector<DecodingOrder> cyclic_orders(std::size_t num_gws);

/// Fractions lambda_k with sum_k lambda_k corner_k = Q and sum lambda = 1.
/// A negative fraction reverses its order and the system is re-solved, at
/// most N times.
TimeShareSchedule time_share_decompose(const GatewayState& gateways,
                                       std::span<const Power> powers,
                                       std::vector<DecodingOrder> orders);

/// w_i = Q_i / sum Q.
std::vector<double> weights_from_queues(std::span<const double> queue_rates);

/// Maximizes sum w_i R_i over powers with sum P_i <= total_cap and rates in
/// the capacity region at those powers.
WeightedRateSolution max_weighted_sum(const GatewayState& gateways,
                                      std::span<const double> weights,
                                      Power total_cap,
                                      const ConvexOptions& options = {});

/// min over nonempty S of log2(1 + sum_S P_i g_i^2 / N0) - sum_S Q_i.
double min_subset_slack(const GatewayState& gateways, std::span<const Power> powers);

/// max over nonempty S of sum_S R_i - log2(1 + sum_S P_i g_i^2 / N0).
double max_rate_violation(const GatewayState& gateways,
                          std::span<const Power> powers,
                          std::span<const double> rates);

}  // namespace geosic
