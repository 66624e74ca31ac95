#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

#include "geosic/random.hpp"

namespace geosic {

/// Power in a single stored unit (milliwatts, the unit used by instance
/// files). Construct through the named factories only.
class Power {
 public:
  constexpr Power() = default;

  static constexpr Power from_milliwatts(double mw) { return Power(mw); }
  static constexpr Power from_watts(double w) { return Power(w * 1e3); }

  constexpr double milliwatts() const { return mw_; }
  constexpr double watts() const { return mw_ * 1e-3; }

  friend constexpr bool operator==(Power, Power) = default;

 private:
  constexpr explicit Power(double mw) : mw_(mw) {}
  double mw_ = 0.0;
};

/// Stage-1 instance: K geophones, N gateways, amplitude gains h_ji.
/// Immutable after construction.
class ChannelMatrix {
 public:
  /// `gains` is row-major K x N: gains[j * N + i] = h_ji.
  ChannelMatrix(std::size_t num_gps, std::size_t num_gws,
                std::vector<double> gains, Power gp_power, Power noise_power);

  std::size_t num_gps() const { return num_gps_; }
  std::size_t num_gws() const { return num_gws_; }
  double gain(std::size_t gp, std::size_t gw) const {
    return gains_[gp * num_gws_ + gw];
  }
  double gain_sq(std::size_t gp, std::size_t gw) const {
    const double h = gain(gp, gw);
    return h * h;
  }
  std::span<const double> gains() const { return gains_; }
  Power gp_power() const { return gp_power_; }
  Power noise_power() const { return noise_power_; }
  /// P / N0, the only power quantity the rate formulas need.
  double snr_scale() const {
    return gp_power_.milliwatts() / noise_power_.milliwatts();
  }

  friend bool operator==(const ChannelMatrix&, const ChannelMatrix&) = default;

 private:
  std::size_t num_gps_;
  std::size_t num_gws_;
  std::vector<double> gains_;
  Power gp_power_;
  Power noise_power_;
};

/// Stage-2 instance: N gateways with queue rates Q_i (bps/Hz) and gains g_i
/// towards the data center.
class GatewayState {
 public:
  GatewayState(std::vector<double> queue_rates, std::vector<double> gains,
               Power noise_power, std::optional<Power> per_gw_power_cap = {},
               std::optional<Power> total_power_cap = {});

  std::size_t num_gws() const { return queue_rates_.size(); }
  std::span<const double> queue_rates() const { return queue_rates_; }
  std::span<const double> gains() const { return gains_; }
  Power noise_power() const { return noise_power_; }
  const std::optional<Power>& per_gw_power_cap() const { return per_gw_cap_; }
  const std::optional<Power>& total_power_cap() const { return total_cap_; }

  friend bool operator==(const GatewayState&, const GatewayState&) = default;

 private:
  std::vector<double> queue_rates_;
  std::vector<double> gains_;
  Power noise_power_;
  std::optional<Power> per_gw_cap_;
  std::optional<Power> total_cap_;
};

/// Independent Rayleigh amplitude per link with scale `sigma` (E[h^2] = 2
/// sigma^2), drawn by inverse CDF in row-major link order.
ChannelMatrix generate_rayleigh(std::size_t num_gps, std::size_t num_gws,
                                Power gp_power, Power noise_power,
                                RngSeed seed, double sigma = 1.0);

using Instance = std::variant<ChannelMatrix, GatewayState>;

nlohmann::json to_json(const ChannelMatrix& channel);
nlohmann::json to_json(const GatewayState& gateways);
Instance instance_from_json(const nlohmann::json& doc);

Instance load_instance(const std::filesystem::path& path);
ChannelMatrix load_channel(const std::filesystem::path& path);
GatewayState load_gateways(const std::filesystem::path& path);
void save_instance(const Instance& instance, const std::filesystem::path& path);

}  // namespace geosic
