#include "geosic/delivery.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "geosic/error.hpp"

namespace geosic {

PowerAllocation PowerAllocation::from_watts(std::span<const double> watts) {
  PowerAllocation out;
  double total = 0.0;
  for (double w : watts) {
    out.powers.push_back(Power::from_watts(w));
    total += w;
  }
  out.total = Power::from_watts(total);
  return out;
}

std::vector<double> PowerAllocation::watts() const {
  std::vector<double> out;
  out.reserve(powers.size());
  for (auto p : powers) out.push_back(p.watts());
  return out;
}

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr std::size_t kMaxSubsetGateways = 24;

std::string gw_name(std::size_t i) { return "GW" + std::to_string(i + 1); }

// Gateways with a nonzero queue. Zero-queue gateways get zero power and
// take no part in the decoding order.
std::vector<std::size_t> active_gateways(const GatewayState& gateways) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < gateways.num_gws(); ++i) {
    if (gateways.queue_rates()[i] > 0.0) {
      if (!(gateways.gains()[i] > 0.0)) {
        fail(ErrorKind::infeasible,
             gw_name(i) + " has a nonzero queue but zero channel gain");
      }
      out.push_back(i);
    }
  }
  require(out.size() <= kMaxSubsetGateways,
          "delivery: subset enumeration supports at most 24 active gateways");
  return out;
}

void check_power_count(const GatewayState& gateways, std::span<const Power> powers) {
  require(powers.size() == gateways.num_gws(), "power vector size must equal N");
}

// Newton's method on t * objective + log barrier, with t increased
// geometrically until num_constraints / t falls below the gap target.
// `eval` returns false outside the barrier's domain.
using BarrierEval = std::function<bool(double t, const Eigen::VectorXd& x,
                                       double& value, Eigen::VectorXd* grad,
                                       Eigen::MatrixXd* hess)>;

Eigen::VectorXd barrier_minimize(const BarrierEval& eval,
                                 const std::function<double(const Eigen::VectorXd&)>& objective,
                                 std::size_t num_constraints, Eigen::VectorXd x,
                                 const ConvexOptions& options) {
  const auto n = x.size();
  double t = 1.0;
  Eigen::VectorXd grad(n);
  Eigen::MatrixXd hess(n, n);
  for (int outer = 0; outer < 200; ++outer) {
    for (std::size_t step = 0; step < options.max_newton_steps; ++step) {
      double value = 0.0;
      if (!eval(t, x, value, &grad, &hess)) {
        fail(ErrorKind::internal, "barrier: iterate left the domain");
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      Eigen::VectorXd dx = ldlt.solve(-grad);
      if (!dx.allFinite()) {
        dx = hess.completeOrthogonalDecomposition().solve(-grad);
      }
      const double decrement = -grad.dot(dx);
      if (!(decrement > 2e-14)) break;
      double s = 1.0;
      double trial = 0.0;
      int halvings = 0;
      while (!eval(t, x + s * dx, trial, nullptr, nullptr) ||
             trial > value - 0.25 * s * decrement) {
        s *= 0.5;
        if (++halvings > 80) break;
      }
      if (halvings > 80) break;
      x += s * dx;
    }
    const double gap = static_cast<double>(num_constraints) / t;
    if (gap <= options.gap_tolerance * std::max(1.0, std::abs(objective(x)))) break;
    t *= options.barrier_growth;
  }
  return x;
}

struct SubsetTable {
  std::vector<std::uint64_t> masks;
  std::vector<double> need;  // 2^{Q(S)} - 1, the required received SNR sum
};

SubsetTable subset_requirements(std::span<const double> q) {
  SubsetTable table;
  const std::uint64_t count = std::uint64_t{1} << q.size();
  for (std::uint64_t mask = 1; mask < count; ++mask) {
    double qs = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      if (mask >> k & 1u) qs += q[k];
    }
    table.masks.push_back(mask);
    table.need.push_back(std::exp2(qs) - 1.0);
  }
  return table;
}

}  // namespace

MinTotalSolution min_total_power_closed_form(const GatewayState& gateways) {
  const auto active = active_gateways(gateways);
  const auto q = gateways.queue_rates();
  const auto g = gateways.gains();
  const double n0 = gateways.noise_power().watts();

  DecodingOrder order = active;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return g[a] > g[b]; });

  std::vector<double> watts(gateways.num_gws(), 0.0);
  // Walk from the last decoded gateway: its suffix is itself alone.
  double suffix_q = 0.0;
  for (std::size_t k = order.size(); k-- > 0;) {
    const std::size_t i = order[k];
    const double before = std::exp2(suffix_q);
    suffix_q += q[i];
    watts[i] = n0 * (std::exp2(suffix_q) - before) / (g[i] * g[i]);
  }
  if (const auto& cap = gateways.per_gw_power_cap()) {
    for (std::size_t i : order) {
      if (watts[i] > cap->watts()) {
        fail(ErrorKind::infeasible,
             gw_name(i) + " needs " + std::to_string(watts[i] * 1e3) +
                 " mW, above the per-gateway cap of " +
                 std::to_string(cap->milliwatts()) + " mW");
      }
    }
  }
  return {PowerAllocation::from_watts(watts), std::move(order)};
}

MinMaxSolution min_max_power(const GatewayState& gateways) {
  const auto active = active_gateways(gateways);
  const double n0 = gateways.noise_power().watts();
  std::vector<double> q, a;
  for (auto i : active) {
    q.push_back(gateways.queue_rates()[i]);
    a.push_back(gateways.gains()[i] * gateways.gains()[i]);
  }
  // All-equal powers t satisfy every constraint iff t >= need(S) / a(S) for
  // all S, and lowering any single power only tightens constraints.
  const auto table = subset_requirements(q);
  double t_star = 0.0;
  for (std::size_t s = 0; s < table.masks.size(); ++s) {
    double as = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (table.masks[s] >> k & 1u) as += a[k];
    }
    t_star = std::max(t_star, n0 * table.need[s] / as);
  }
  if (const auto& cap = gateways.per_gw_power_cap()) {
    if (t_star > cap->watts()) {
      fail(ErrorKind::infeasible,
           "min-max power " + std::to_string(t_star * 1e3) +
               " mW exceeds the per-gateway cap of " +
               std::to_string(cap->milliwatts()) + " mW");
    }
  }
  std::vector<double> watts(gateways.num_gws(), 0.0);
  for (auto i : active) watts[i] = t_star;
  return {PowerAllocation::from_watts(watts), Power::from_watts(t_star)};
}

PowerAllocation min_total_power_convex(const GatewayState& gateways,
                                       const ConvexOptions& options) {
  const auto active = active_gateways(gateways);
  const double n0 = gateways.noise_power().watts();
  std::vector<double> watts(gateways.num_gws(), 0.0);
  if (active.empty()) return PowerAllocation::from_watts(watts);

  // Work in u = P / N0 so the constraints read log2(1 + a(S).u) >= Q(S).
  const auto n = static_cast<Eigen::Index>(active.size());
  std::vector<double> q;
  Eigen::VectorXd a(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    q.push_back(gateways.queue_rates()[active[k]]);
    a[k] = gateways.gains()[active[k]] * gateways.gains()[active[k]];
  }
  const auto table = subset_requirements(q);
  std::vector<double> q_subset;
  for (double need : table.need) q_subset.push_back(std::log2(1.0 + need));
  const auto& cap = gateways.per_gw_power_cap();
  const double u_cap = cap ? cap->watts() / n0 : std::numeric_limits<double>::infinity();

  // Strictly feasible start: all-equal powers above the min-max level.
  double t_star = 0.0;
  for (std::size_t s = 0; s < table.masks.size(); ++s) {
    double as = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (table.masks[s] >> k & 1u) as += a[k];
    }
    t_star = std::max(t_star, table.need[s] / as);
  }
  if (t_star >= u_cap) {
    fail(ErrorKind::infeasible,
         "no power allocation within the per-gateway cap drains all queues");
  }
  const double start = std::isfinite(u_cap) ? 0.5 * (t_star + u_cap) : 2.0 * t_star + 1.0;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, start);

  const std::size_t num_constraints =
      table.masks.size() + active.size() * (std::isfinite(u_cap) ? 2 : 1);

  BarrierEval eval = [&](double t, const Eigen::VectorXd& u, double& value,
                         Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    value = t * u.sum();
    if (grad) grad->setConstant(t);
    if (hess) hess->setZero();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!(u[k] > 0.0) || !(u[k] < u_cap)) return false;
      value -= std::log(u[k]);
      if (grad) (*grad)[k] -= 1.0 / u[k];
      if (hess) (*hess)(k, k) += 1.0 / (u[k] * u[k]);
      if (std::isfinite(u_cap)) {
        const double r = u_cap - u[k];
        value -= std::log(r);
        if (grad) (*grad)[k] += 1.0 / r;
        if (hess) (*hess)(k, k) += 1.0 / (r * r);
      }
    }
    Eigen::VectorXd as(n);
    for (std::size_t s = 0; s < table.masks.size(); ++s) {
      double dot = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        as[k] = (table.masks[s] >> k & 1u) ? a[k] : 0.0;
        dot += as[k] * u[k];
      }
      const double slack = std::log2(1.0 + dot) - q_subset[s];
      if (!(slack > 0.0)) return false;
      value -= std::log(slack);
      if (grad || hess) {
        const double denom = kLn2 * (1.0 + dot);
        // d slack / du = as / denom; d^2 slack = -as as^T / (ln2 (1+dot)^2)
        if (grad) *grad -= as / (denom * slack);
        if (hess) {
          const double c1 = 1.0 / (denom * denom * slack * slack);
          const double c2 = 1.0 / (kLn2 * (1.0 + dot) * (1.0 + dot) * slack);
          *hess += (c1 + c2) * as * as.transpose();
        }
      }
    }
    return std::isfinite(value);
  };
  x = barrier_minimize(eval, [](const Eigen::VectorXd& u) { return u.sum(); },
                       num_constraints, x, options);

  for (Eigen::Index k = 0; k < n; ++k) watts[active[k]] = x[k] * n0;
  return PowerAllocation::from_watts(watts);
}

std::vector<double> corner_rates(const GatewayState& gateways,
                                 std::span<const Power> powers,
                                 const DecodingOrder& order) {
  check_power_count(gateways, powers);
  const double n0 = gateways.noise_power().watts();
  std::vector<double> rates(gateways.num_gws(), 0.0);
  double rest = 0.0;
  for (std::size_t k = order.size(); k-- > 0;) {
    const std::size_t i = order[k];
    require(i < gateways.num_gws(), "decoding order: gateway index out of range");
    const double rx = powers[i].watts() * gateways.gains()[i] * gateways.gains()[i];
    rates[i] = std::log2(1.0 + rx / (n0 + rest));
    rest += rx;
  }
  return rates;
}

std::vector<DecodingOrder> cyclic_orders(std::size_t num_gws) {
  std::vector<DecodingOrder> orders;
  for (std::size_t s = 0; s < num_gws; ++s) {
    DecodingOrder order(num_gws);
    for (std::size_t k = 0; k < num_gws; ++k) order[k] = (s + k) % num_gws;
    orders.push_back(std::move(order));
  }
  return orders;
}

namespace {

std::string format_order(const DecodingOrder& order) {
  std::string s;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k) s += "->";
    s += std::to_string(order[k] + 1);
  }
  return s;
}

}  // namespace

TimeShareSchedule time_share_decompose(const GatewayState& gateways,
                                       std::span<const Power> powers,
                                       std::vector<DecodingOrder> orders) {
  check_power_count(gateways, powers);
  const std::size_t num_gws = gateways.num_gws();
  require(!orders.empty(), "time sharing needs at least one decoding order");
  for (const auto& order : orders) {
    DecodingOrder sorted = order;
    std::sort(sorted.begin(), sorted.end());
    DecodingOrder identity(num_gws);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    if (sorted != identity) {
      fail(ErrorKind::invalid_argument,
           "decoding order " + format_order(order) + " is not a permutation of 1.." +
               std::to_string(num_gws));
    }
  }

  const auto num_orders = static_cast<Eigen::Index>(orders.size());
  const auto rows = static_cast<Eigen::Index>(num_gws) + 1;
  Eigen::VectorXd target(rows);
  for (std::size_t i = 0; i < num_gws; ++i) target[i] = gateways.queue_rates()[i];
  target[rows - 1] = 1.0;

  TimeShareSchedule schedule;
  for (std::size_t attempt = 0;; ++attempt) {
    Eigen::MatrixXd system(rows, num_orders);
    for (Eigen::Index k = 0; k < num_orders; ++k) {
      const auto corner = corner_rates(gateways, powers, orders[k]);
      for (std::size_t i = 0; i < num_gws; ++i) system(i, k) = corner[i];
      system(rows - 1, k) = 1.0;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(system);
    if (qr.rank() < num_orders) {
      fail(ErrorKind::decomposition,
           "corner system is singular for the given decoding orders");
    }
    const Eigen::VectorXd lambda = qr.solve(target);
    const double residual = (system * lambda - target).cwiseAbs().maxCoeff();
    if (!(residual <= 1e-9)) {
      fail(ErrorKind::decomposition,
           "target rates are not a convex combination of the corners (residual " +
               std::to_string(residual) + "); Q must lie on the dominant face");
    }
    Eigen::Index worst = 0;
    const double min_lambda = lambda.minCoeff(&worst);
    if (min_lambda >= -1e-12) {
      for (Eigen::Index k = 0; k < num_orders; ++k) {
        schedule.entries.push_back({orders[k], std::max(0.0, lambda[k])});
      }
      return schedule;
    }
    if (attempt >= num_gws) {
      fail(ErrorKind::decomposition,
           "fraction for order " + format_order(orders[worst]) +
               " stays negative after " + std::to_string(attempt) + " flips");
    }
    std::reverse(orders[worst].begin(), orders[worst].end());
    ++schedule.flips;
  }
}

std::vector<double> weights_from_queues(std::span<const double> queue_rates) {
  const double total = std::accumulate(queue_rates.begin(), queue_rates.end(), 0.0);
  require(total > 0.0, "weights: queues must not all be zero");
  std::vector<double> w;
  for (double q : queue_rates) w.push_back(q / total);
  return w;
}

WeightedRateSolution max_weighted_sum(const GatewayState& gateways,
                                      std::span<const double> weights,
                                      Power total_cap, const ConvexOptions& options) {
  const std::size_t num_gws = gateways.num_gws();
  require(weights.size() == num_gws, "weights: size must equal N");
  double wsum = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, "weights must be finite and >= 0");
    wsum += w;
  }
  require(std::abs(wsum - 1.0) <= 1e-6, "weights must sum to 1");
  require(total_cap.watts() > 0.0, "total power cap must be > 0");

  const double n0 = gateways.noise_power().watts();
  const double budget = total_cap.watts() / n0;

  // For any powers, the weighted sum over the capacity region peaks at the
  // corner that decodes lower weights first (ties by index).
  DecodingOrder by_weight(num_gws);
  std::iota(by_weight.begin(), by_weight.end(), std::size_t{0});
  std::stable_sort(by_weight.begin(), by_weight.end(),
                   [&](std::size_t x, std::size_t y) { return weights[x] < weights[y]; });

  // Objective: sum_k c_k log2(1 + sum_{l >= k} a_l u_l), c_k = w_k - w_{k-1}
  // along by_weight, which is concave in u = P / N0.
  const auto n = static_cast<Eigen::Index>(num_gws);
  std::vector<double> coef(num_gws);
  Eigen::VectorXd a(n);
  for (std::size_t k = 0; k < num_gws; ++k) {
    coef[k] = weights[by_weight[k]] - (k ? weights[by_weight[k - 1]] : 0.0);
    const double g = gateways.gains()[by_weight[k]];
    a[static_cast<Eigen::Index>(k)] = g * g;
  }
  // Variables are in by_weight order inside the solver.
  auto concave = [&](const Eigen::VectorXd& u, Eigen::VectorXd* grad,
                     Eigen::MatrixXd* hess) {
    double f = 0.0;
    double suffix = 0.0;
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = n; k-- > 0;) {
      suffix += a[k] * u[k];
      mask[k] = a[k];
      if (coef[k] == 0.0) continue;
      const double z = 1.0 + suffix;
      f += coef[k] * std::log2(z);
      if (grad) *grad += coef[k] / (kLn2 * z) * mask;
      if (hess) *hess -= coef[k] / (kLn2 * z * z) * mask * mask.transpose();
    }
    return f;
  };

  BarrierEval eval = [&](double t, const Eigen::VectorXd& u, double& value,
                         Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    const double rest = budget - u.sum();
    if (!(rest > 0.0)) return false;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!(u[k] > 0.0)) return false;
    }
    Eigen::VectorXd fg = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd fh = Eigen::MatrixXd::Zero(n, n);
    const double f = concave(u, grad ? &fg : nullptr, hess ? &fh : nullptr);
    value = -t * f - std::log(rest);
    for (Eigen::Index k = 0; k < n; ++k) value -= std::log(u[k]);
    if (grad) {
      *grad = -t * fg;
      for (Eigen::Index k = 0; k < n; ++k) (*grad)[k] += 1.0 / rest - 1.0 / u[k];
    }
    if (hess) {
      *hess = -t * fh;
      hess->array() += 1.0 / (rest * rest);
      for (Eigen::Index k = 0; k < n; ++k) (*hess)(k, k) += 1.0 / (u[k] * u[k]);
    }
    return std::isfinite(value);
  };
  Eigen::VectorXd u = Eigen::VectorXd::Constant(n, budget / (2.0 * static_cast<double>(n)));
  u = barrier_minimize(
      eval, [&](const Eigen::VectorXd& x) { return -concave(x, nullptr, nullptr); },
      num_gws + 1, u, options);

  WeightedRateSolution out;
  out.weights.assign(weights.begin(), weights.end());
  std::vector<double> watts(num_gws, 0.0);
  const double off_threshold = 1e-7 * budget;
  for (std::size_t k = 0; k < num_gws; ++k) {
    const double uk = u[static_cast<Eigen::Index>(k)];
    if (uk > off_threshold) watts[by_weight[k]] = uk * n0;
  }
  out.allocation = PowerAllocation::from_watts(watts);
  for (std::size_t k = 0; k < num_gws; ++k) {
    if (watts[by_weight[k]] > 0.0) {
      out.order.push_back(by_weight[k]);
    }
  }
  for (std::size_t i = 0; i < num_gws; ++i) {
    if (watts[i] == 0.0) out.off_set.push_back(i);
  }
  out.rates = corner_rates(gateways, out.allocation.powers, out.order);
  for (std::size_t i = 0; i < num_gws; ++i) out.objective += weights[i] * out.rates[i];
  return out;
}

double min_subset_slack(const GatewayState& gateways, std::span<const Power> powers) {
  check_power_count(gateways, powers);
  const std::size_t n = gateways.num_gws();
  require(n <= kMaxSubsetGateways, "min_subset_slack: too many gateways");
  const double n0 = gateways.noise_power().watts();
  double worst = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    double rx = 0.0, q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) {
        rx += powers[i].watts() * gateways.gains()[i] * gateways.gains()[i];
        q += gateways.queue_rates()[i];
      }
    }
    worst = std::min(worst, std::log2(1.0 + rx / n0) - q);
  }
  return worst;
}

double max_rate_violation(const GatewayState& gateways, std::span<const Power> powers,
                          std::span<const double> rates) {
  check_power_count(gateways, powers);
  const std::size_t n = gateways.num_gws();
  require(rates.size() == n, "rate vector size must equal N");
  require(n <= kMaxSubsetGateways, "max_rate_violation: too many gateways");
  const double n0 = gateways.noise_power().watts();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    double rx = 0.0, r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) {
        rx += powers[i].watts() * gateways.gains()[i] * gateways.gains()[i];
        r += rates[i];
      }
    }
    worst = std::max(worst, r - std::log2(1.0 + rx / n0));
  }
  return worst;
}

}  // namespace geosic
