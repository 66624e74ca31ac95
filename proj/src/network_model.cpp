#include "geosic/network_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "geosic/error.hpp"

namespace geosic {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }
bool nonnegative_finite(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

ChannelMatrix::ChannelMatrix(std::size_t num_gps, std::size_t num_gws,
                             std::vector<double> gains, Power gp_power,
                             Power noise_power)
    : num_gps_(num_gps),
      num_gws_(num_gws),
      gains_(std::move(gains)),
      gp_power_(gp_power),
      noise_power_(noise_power) {
  require(num_gps_ >= 1, "channel: number of geophones must be >= 1");
  require(num_gws_ >= 1, "channel: number of gateways must be >= 1");
  if (gains_.size() != num_gps_ * num_gws_) {
    fail(ErrorKind::validation,
         "channel: expected " + std::to_string(num_gps_ * num_gws_) +
             " gains for K=" + std::to_string(num_gps_) +
             ", N=" + std::to_string(num_gws_) + ", got " +
             std::to_string(gains_.size()));
  }
  for (double h : gains_) {
    require(nonnegative_finite(h), "channel: gains must be finite and >= 0");
  }
  require(positive_finite(gp_power_.milliwatts()),
          "channel: geophone power must be > 0");
  require(positive_finite(noise_power_.milliwatts()),
          "channel: noise power must be > 0");
}

GatewayState::GatewayState(std::vector<double> queue_rates,
                           std::vector<double> gains, Power noise_power,
                           std::optional<Power> per_gw_power_cap,
                           std::optional<Power> total_power_cap)
    : queue_rates_(std::move(queue_rates)),
      gains_(std::move(gains)),
      noise_power_(noise_power),
      per_gw_cap_(per_gw_power_cap),
      total_cap_(total_power_cap) {
  require(!queue_rates_.empty(), "gateways: N must be >= 1");
  if (gains_.size() != queue_rates_.size()) {
    fail(ErrorKind::validation,
         "gateways: Q has " + std::to_string(queue_rates_.size()) +
             " entries but G has " + std::to_string(gains_.size()));
  }
  for (double q : queue_rates_) {
    require(nonnegative_finite(q), "gateways: queue rates must be >= 0");
  }
  for (double g : gains_) {
    require(nonnegative_finite(g), "gateways: gains must be >= 0");
  }
  require(positive_finite(noise_power_.milliwatts()),
          "gateways: noise power must be > 0");
  if (per_gw_cap_) {
    require(positive_finite(per_gw_cap_->milliwatts()),
            "gateways: per-gateway power cap must be > 0");
  }
  if (total_cap_) {
    require(positive_finite(total_cap_->milliwatts()),
            "gateways: total power cap must be > 0");
  }
}

ChannelMatrix generate_rayleigh(std::size_t num_gps, std::size_t num_gws,
                                Power gp_power, Power noise_power,
                                RngSeed seed, double sigma) {
  require(num_gps >= 1 && num_gws >= 1,
          "generate_rayleigh: dimensions must be >= 1");
  require(positive_finite(gp_power.milliwatts()) &&
              positive_finite(noise_power.milliwatts()),
          "generate_rayleigh: powers must be > 0");
  require(positive_finite(sigma), "generate_rayleigh: scale must be > 0");

  Rng rng(seed);
  std::vector<double> gains(num_gps * num_gws);
  for (double& h : gains) {
    // F^{-1}(u) = sigma sqrt(-2 ln(1 - u)); 1 - u lies in (0, 1].
    const double u = rng.uniform();
    h = sigma * std::sqrt(-2.0 * std::log1p(-u));
  }
  return ChannelMatrix(num_gps, num_gws, std::move(gains), gp_power,
                       noise_power);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const ChannelMatrix& channel) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t j = 0; j < channel.num_gps(); ++j) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t i = 0; i < channel.num_gws(); ++i) {
      row.push_back(channel.gain(j, i));
    }
    rows.push_back(std::move(row));
  }
  return {{"kind", "channel"},
          {"K", channel.num_gps()},
          {"N", channel.num_gws()},
          {"P_mW", channel.gp_power().milliwatts()},
          {"N0_mW", channel.noise_power().milliwatts()},
          {"H", std::move(rows)}};
}

nlohmann::json to_json(const GatewayState& gateways) {
  nlohmann::json doc = {
      {"kind", "gateways"},
      {"N", gateways.num_gws()},
      {"Q", std::vector<double>(gateways.queue_rates().begin(),
                                gateways.queue_rates().end())},
      {"G", std::vector<double>(gateways.gains().begin(),
                                gateways.gains().end())},
      {"N0_mW", gateways.noise_power().milliwatts()}};
  if (gateways.per_gw_power_cap()) {
    doc["Pmax_mW"] = gateways.per_gw_power_cap()->milliwatts();
  }
  if (gateways.total_power_cap()) {
    doc["Ptotal_mW"] = gateways.total_power_cap()->milliwatts();
  }
  return doc;
}

namespace {

const nlohmann::json& field(const nlohmann::json& doc, const char* name) {
  if (!doc.contains(name)) {
    fail(ErrorKind::parse, std::string("missing field '") + name + "'");
  }
  return doc.at(name);
}

double number_field(const nlohmann::json& doc, const char* name) {
  const auto& v = field(doc, name);
  if (!v.is_number()) {
    fail(ErrorKind::parse, std::string("field '") + name + "' must be a number");
  }
  return v.get<double>();
}

std::size_t count_field(const nlohmann::json& doc, const char* name) {
  const auto& v = field(doc, name);
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    fail(ErrorKind::parse,
         std::string("field '") + name + "' must be a positive integer");
  }
  return v.get<std::size_t>();
}

std::vector<double> vector_field(const nlohmann::json& doc, const char* name) {
  const auto& v = field(doc, name);
  if (!v.is_array()) {
    fail(ErrorKind::parse, std::string("field '") + name + "' must be an array");
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_number()) {
      fail(ErrorKind::parse, std::string("field '") + name + "[" +
                                 std::to_string(k) + "]' must be a number");
    }
    out.push_back(v[k].get<double>());
  }
  return out;
}

ChannelMatrix channel_from_json(const nlohmann::json& doc) {
  const std::size_t num_gps = count_field(doc, "K");
  const std::size_t num_gws = count_field(doc, "N");
  const auto& rows = field(doc, "H");
  if (!rows.is_array()) fail(ErrorKind::parse, "field 'H' must be an array");
  if (rows.size() != num_gps) {
    fail(ErrorKind::validation, "field 'H' has " + std::to_string(rows.size()) +
                                    " rows but K=" + std::to_string(num_gps));
  }
  std::vector<double> gains;
  gains.reserve(num_gps * num_gws);
  for (std::size_t j = 0; j < num_gps; ++j) {
    const auto& row = rows[j];
    if (!row.is_array()) {
      fail(ErrorKind::parse, "field 'H[" + std::to_string(j) + "]' must be an array");
    }
    if (row.size() != num_gws) {
      fail(ErrorKind::validation, "field 'H[" + std::to_string(j) + "]' has " +
                                      std::to_string(row.size()) +
                                      " entries but N=" + std::to_string(num_gws));
    }
    for (std::size_t i = 0; i < num_gws; ++i) {
      if (!row[i].is_number()) {
        fail(ErrorKind::parse, "field 'H[" + std::to_string(j) + "][" +
                                   std::to_string(i) + "]' must be a number");
      }
      gains.push_back(row[i].get<double>());
    }
  }
  try {
    return ChannelMatrix(num_gps, num_gws, std::move(gains),
                         Power::from_milliwatts(number_field(doc, "P_mW")),
                         Power::from_milliwatts(number_field(doc, "N0_mW")));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) {
      fail(ErrorKind::validation, e.what());
    }
    throw;
  }
}

GatewayState gateways_from_json(const nlohmann::json& doc) {
  const std::size_t num_gws = count_field(doc, "N");
  auto queue_rates = vector_field(doc, "Q");
  auto gains = vector_field(doc, "G");
  if (queue_rates.size() != num_gws) {
    fail(ErrorKind::validation, "field 'Q' has " +
                                    std::to_string(queue_rates.size()) +
                                    " entries but N=" + std::to_string(num_gws));
  }
  if (gains.size() != num_gws) {
    fail(ErrorKind::validation, "field 'G' has " + std::to_string(gains.size()) +
                                    " entries but N=" + std::to_string(num_gws));
  }
  std::optional<Power> per_gw_cap;
  std::optional<Power> total_cap;
  if (doc.contains("Pmax_mW") && !doc["Pmax_mW"].is_null()) {
    per_gw_cap = Power::from_milliwatts(number_field(doc, "Pmax_mW"));
  }
  if (doc.contains("Ptotal_mW") && !doc["Ptotal_mW"].is_null()) {
    total_cap = Power::from_milliwatts(number_field(doc, "Ptotal_mW"));
  }
  try {
    return GatewayState(std::move(queue_rates), std::move(gains),
                        Power::from_milliwatts(number_field(doc, "N0_mW")),
                        per_gw_cap, total_cap);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) {
      fail(ErrorKind::validation, e.what());
    }
    throw;
  }
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

}  // namespace

Instance instance_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) fail(ErrorKind::parse, "instance must be a JSON object");
  const auto& kind = field(doc, "kind");
  if (kind == "channel") return channel_from_json(doc);
  if (kind == "gateways") return gateways_from_json(doc);
  fail(ErrorKind::parse, "field 'kind' must be \"channel\" or \"gateways\"");
}

Instance load_instance(const std::filesystem::path& path) {
  return instance_from_json(read_json(path));
}

ChannelMatrix load_channel(const std::filesystem::path& path) {
  auto inst = load_instance(path);
  if (auto* ch = std::get_if<ChannelMatrix>(&inst)) return std::move(*ch);
  fail(ErrorKind::validation, path.string() + ": expected a channel instance");
}

GatewayState load_gateways(const std::filesystem::path& path) {
  auto inst = load_instance(path);
  if (auto* gw = std::get_if<GatewayState>(&inst)) return std::move(*gw);
  fail(ErrorKind::validation, path.string() + ": expected a gateways instance");
}

void save_instance(const Instance& instance, const std::filesystem::path& path) {
  const nlohmann::json doc =
      std::visit([](const auto& x) { return to_json(x); }, instance);
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
  // nlohmann emits the shortest representation that round-trips a double.
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

}  // namespace geosic
