#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "geosic/network_model.hpp"

namespace geosic {

/// Binary K x N matrix F; F(j, i) = 1 iff gateway i decodes geophone j.
/// Flattened row-major, so bit index d = j * N + i.
class DecodingAssignment {
 public:
  DecodingAssignment(std::size_t num_gps, std::size_t num_gws, bool value = false)
      : num_gps_(num_gps), num_gws_(num_gws), flags_(num_gps * num_gws, value) {}
  DecodingAssignment(std::size_t num_gps, std::size_t num_gws,
                     std::vector<std::uint8_t> flags);

  static DecodingAssignment all_ones(std::size_t num_gps, std::size_t num_gws) {
    return DecodingAssignment(num_gps, num_gws, true);
  }
  static DecodingAssignment zeros(std::size_t num_gps, std::size_t num_gws) {
    return DecodingAssignment(num_gps, num_gws, false);
  }

  std::size_t num_gps() const { return num_gps_; }
  std::size_t num_gws() const { return num_gws_; }
  std::size_t num_bits() const { return flags_.size(); }

  bool decodes(std::size_t gp, std::size_t gw) const {
    return flags_[gp * num_gws_ + gw] != 0;
  }
  void set(std::size_t gp, std::size_t gw, bool value) {
    flags_[gp * num_gws_ + gw] = value ? 1 : 0;
  }
  bool bit(std::size_t d) const { return flags_[d] != 0; }
  void set_bit(std::size_t d, bool value) { flags_[d] = value ? 1 : 0; }
  void flip_bit(std::size_t d) { flags_[d] ^= 1; }
  std::span<const std::uint8_t> flags() const { return flags_; }

  /// Geophones decoded at `gw`, ascending index.
  std::vector<std::size_t> decoded_set(std::size_t gw) const;
  bool decoded_anywhere(std::size_t gp) const;

  friend bool operator==(const DecodingAssignment&,
                         const DecodingAssignment&) = default;
  /// Lexicographic over the flattened flags.
  friend auto operator<=>(const DecodingAssignment& a,
                          const DecodingAssignment& b) {
    return a.flags_ <=> b.flags_;
  }

 private:
  std::size_t num_gps_;
  std::size_t num_gws_;
  std::vector<std::uint8_t> flags_;
};

enum class OrderPolicy {
  descending_gain_corner,  // fixed SIC order by decreasing gain, min over gateways
  lp_exact,                // full subset-constraint LP
};

/// What happens to a geophone that a gateway does not decode.
enum class UndecodedPolicy {
  interferes,  // every undecoded geophone is interference at that gateway
  silent,      // geophones decoded by no gateway stay off and do not interfere
};

struct EvaluationMode {
  OrderPolicy order = OrderPolicy::descending_gain_corner;
  UndecodedPolicy undecoded = UndecodedPolicy::interferes;
};

OrderPolicy parse_order_policy(std::string_view name);
UndecodedPolicy parse_scenario(int scenario);
std::string_view to_string(OrderPolicy policy);

/// Per-geophone rates in bps/Hz plus their sum.
struct RateVector {
  std::vector<double> rates;
  double sum_rate = 0.0;
};

/// Point-to-point Shannon rate log2(1 + signal_power * gain^2 / noise).
double link_capacity(double signal_power, double gain,
                     double noise_plus_interference);

/// Geophones that act as interference at `gw` under `policy`.
std::vector<std::size_t> interferers(const ChannelMatrix& channel,
                                     const DecodingAssignment& assignment,
                                     std::size_t gw, UndecodedPolicy policy);

/// SIC rate bounds at one gateway for the given decoding permutation of its
/// decoded set. Entry k is the bound of permutation[k]: it sees the geophones
/// decoded after it plus the undecoded interferers.
std::vector<double> sic_corner_rates(const ChannelMatrix& channel,
                                     const DecodingAssignment& assignment,
                                     std::size_t gw,
                                     std::span<const std::size_t> permutation,
                                     UndecodedPolicy policy);

RateVector evaluate_fixed_order(const ChannelMatrix& channel,
                                const DecodingAssignment& assignment,
                                UndecodedPolicy policy);

/// Largest decoded set per gateway that evaluate_lp accepts.
inline constexpr std::size_t kMaxLpDecodedSet = 20;

RateVector evaluate_lp(const ChannelMatrix& channel,
                       const DecodingAssignment& assignment,
                       UndecodedPolicy policy);

RateVector evaluate(const ChannelMatrix& channel,
                    const DecodingAssignment& assignment, EvaluationMode mode);

/// Right-hand side of one subset constraint at `gw`:
/// log2(1 + P sum_{j in subset} h_ji^2 / (N0 + P sum_{interferers} h_mi^2)).
double subset_capacity(const ChannelMatrix& channel, std::size_t gw,
                       std::span<const std::size_t> subset,
                       std::span<const std::size_t> interfering);

/// Largest violation of any subset constraint by `rates` across all gateways
/// (<= 0 means feasible). Enumerates subsets; intended for checks.
double max_constraint_violation(const ChannelMatrix& channel,
                                const DecodingAssignment& assignment,
                                std::span<const double> rates,
                                UndecodedPolicy policy);

/// Size of the decoding search space, [sum_{i=0}^{K} C(K,i)]^N.
boost::multiprecision::cpp_int search_space_size(unsigned num_gps,
                                                 unsigned num_gws);

}  // namespace geosic
