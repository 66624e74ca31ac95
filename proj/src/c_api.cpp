#include "geosic/geosic.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "geosic/decode_search.hpp"
#include "geosic/delivery.hpp"
#include "geosic/error.hpp"
#include "geosic/experiment.hpp"
#include "geosic/network_model.hpp"
#include "geosic/rate_engine.hpp"

struct geosic_channel {
  geosic::ChannelMatrix value;
};

struct geosic_gateways {
  geosic::GatewayState value;
};

namespace {

using namespace geosic;
using nlohmann::json;

thread_local std::string last_error;

geosic_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
    case ErrorKind::validation: return GEOSIC_ERR_INVALID;
    case ErrorKind::parse: return GEOSIC_ERR_PARSE;
    case ErrorKind::infeasible: return GEOSIC_ERR_INFEASIBLE;
    case ErrorKind::capacity: return GEOSIC_ERR_CAPACITY;
    case ErrorKind::decomposition: return GEOSIC_ERR_DECOMPOSITION;
    case ErrorKind::io: return GEOSIC_ERR_IO;
    case ErrorKind::internal: return GEOSIC_ERR_INTERNAL;
  }
  return GEOSIC_ERR_INTERNAL;
}

/// Runs `body`, translating exceptions into status codes.
template <typename Body>
geosic_status guarded(Body&& body) {
  try {
    body();
    last_error.clear();
    return GEOSIC_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    last_error = e.what();
    return GEOSIC_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GEOSIC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GEOSIC_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return GEOSIC_ERR_INTERNAL;
  }
}

template <typename T>
void need(const T* p, const char* what) {
  if (!p) fail(ErrorKind::invalid_argument, std::string(what) + " must not be null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::optional<Power> cap_from(double mw) {
  if (mw > 0.0) return Power::from_milliwatts(mw);
  return std::nullopt;
}

EvaluationMode mode_from(geosic_evaluator evaluator, geosic_scenario scenario) {
  if (evaluator != GEOSIC_EVAL_FIXED_ORDER && evaluator != GEOSIC_EVAL_LP) {
    fail(ErrorKind::invalid_argument, "unknown evaluator code");
  }
  return {evaluator == GEOSIC_EVAL_LP ? OrderPolicy::lp_exact
                                      : OrderPolicy::descending_gain_corner,
          parse_scenario(static_cast<int>(scenario))};
}

json milliwatts(const std::vector<Power>& powers) {
  json out = json::array();
  for (Power p : powers) out.push_back(p.milliwatts());
  return out;
}

json gateway_numbers(const std::vector<std::size_t>& indices) {
  json out = json::array();
  for (auto i : indices) out.push_back(i + 1);
  return out;
}

json assignment_json(const DecodingAssignment& f) {
  json rows = json::array();
  for (std::size_t j = 0; j < f.num_gps(); ++j) {
    json row = json::array();
    for (std::size_t i = 0; i < f.num_gws(); ++i) row.push_back(f.decodes(j, i) ? 1 : 0);
    rows.push_back(row);
  }
  return rows;
}

json min_total_json(const GatewayState& gw) {
  const auto sol = min_total_power_closed_form(gw);
  return {{"problem", "min-total"},
          {"powers_mW", milliwatts(sol.allocation.powers)},
          {"total_mW", sol.allocation.total.milliwatts()},
          {"order", gateway_numbers(sol.order)}};
}

json min_max_json(const GatewayState& gw) {
  const auto sol = min_max_power(gw);
  json out{{"problem", "min-max"},
           {"powers_mW", milliwatts(sol.allocation.powers)},
           {"total_mW", sol.allocation.total.milliwatts()},
           {"max_mW", sol.max_power.milliwatts()}};
  // A failed decomposition does not invalidate the powers.
  try {
    const auto schedule =
        time_share_decompose(gw, sol.allocation.powers, cyclic_orders(gw.num_gws()));
    json entries = json::array();
    for (const auto& e : schedule.entries) {
      entries.push_back({{"order", gateway_numbers(e.order)}, {"fraction", e.fraction}});
    }
    out["schedule"] = {{"entries", entries}, {"flips", schedule.flips}};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::decomposition) throw;
    out["schedule"] = nullptr;
    out["schedule_error"] = e.what();
  }
  return out;
}

json weighted_json(const GatewayState& gw, const double* weights, double total_cap_mw) {
  std::vector<double> w;
  if (weights) {
    w.assign(weights, weights + gw.num_gws());
  } else {
    w = weights_from_queues(gw.queue_rates());
  }
  std::optional<Power> cap = cap_from(total_cap_mw);
  if (!cap) cap = gw.total_power_cap();
  if (!cap) {
    fail(ErrorKind::invalid_argument,
         "weighted: a total power cap is required (instance Ptotal_mW or argument)");
  }
  const auto sol = max_weighted_sum(gw, w, *cap);
  return {{"problem", "weighted"},
          {"powers_mW", milliwatts(sol.allocation.powers)},
          {"total_mW", sol.allocation.total.milliwatts()},
          {"rates", sol.rates},
          {"weights", sol.weights},
          {"order", gateway_numbers(sol.order)},
          {"off_set", gateway_numbers(sol.off_set)},
          {"objective", sol.objective}};
}

}  // namespace

extern "C" {

const char* geosic_version(void) { return "0.1.0"; }

const char* geosic_last_error(void) { return last_error.c_str(); }

void geosic_string_free(char* s) { std::free(s); }

geosic_status geosic_channel_generate(size_t num_gps, size_t num_gws, double gp_power_mw,
                                      double noise_mw, uint64_t seed,
                                      geosic_channel** out) {
  return guarded([&] {
    need(out, "out");
    *out = new geosic_channel{generate_rayleigh(num_gps, num_gws,
                                                Power::from_milliwatts(gp_power_mw),
                                                Power::from_milliwatts(noise_mw),
                                                RngSeed{seed})};
  });
}

geosic_status geosic_channel_create(size_t num_gps, size_t num_gws, const double* gains,
                                    double gp_power_mw, double noise_mw,
                                    geosic_channel** out) {
  return guarded([&] {
    need(out, "out");
    need(gains, "gains");
    std::vector<double> h(gains, gains + num_gps * num_gws);
    *out = new geosic_channel{ChannelMatrix(num_gps, num_gws, std::move(h),
                                            Power::from_milliwatts(gp_power_mw),
                                            Power::from_milliwatts(noise_mw))};
  });
}

geosic_status geosic_channel_load(const char* path, geosic_channel** out) {
  return guarded([&] {
    need(out, "out");
    need(path, "path");
    *out = new geosic_channel{load_channel(path)};
  });
}

geosic_status geosic_channel_save(const geosic_channel* channel, const char* path) {
  return guarded([&] {
    need(channel, "channel");
    need(path, "path");
    save_instance(channel->value, path);
  });
}

void geosic_channel_free(geosic_channel* channel) { delete channel; }

geosic_status geosic_channel_dims(const geosic_channel* channel, size_t* num_gps,
                                  size_t* num_gws) {
  return guarded([&] {
    need(channel, "channel");
    if (num_gps) *num_gps = channel->value.num_gps();
    if (num_gws) *num_gws = channel->value.num_gws();
  });
}

geosic_status geosic_channel_gain(const geosic_channel* channel, size_t gp, size_t gw,
                                  double* out) {
  return guarded([&] {
    need(channel, "channel");
    need(out, "out");
    require(gp < channel->value.num_gps() && gw < channel->value.num_gws(),
            "gain index out of range");
    *out = channel->value.gain(gp, gw);
  });
}

geosic_status geosic_gateways_create(size_t num_gws, const double* queue_rates,
                                     const double* gains, double noise_mw,
                                     double per_gw_cap_mw, double total_cap_mw,
                                     geosic_gateways** out) {
  return guarded([&] {
    need(out, "out");
    need(queue_rates, "queue_rates");
    need(gains, "gains");
    *out = new geosic_gateways{GatewayState(
        std::vector<double>(queue_rates, queue_rates + num_gws),
        std::vector<double>(gains, gains + num_gws), Power::from_milliwatts(noise_mw),
        cap_from(per_gw_cap_mw), cap_from(total_cap_mw))};
  });
}

geosic_status geosic_gateways_load(const char* path, geosic_gateways** out) {
  return guarded([&] {
    need(out, "out");
    need(path, "path");
    *out = new geosic_gateways{load_gateways(path)};
  });
}

geosic_status geosic_gateways_save(const geosic_gateways* gateways, const char* path) {
  return guarded([&] {
    need(gateways, "gateways");
    need(path, "path");
    save_instance(gateways->value, path);
  });
}

void geosic_gateways_free(geosic_gateways* gateways) { delete gateways; }

geosic_status geosic_gateways_dims(const geosic_gateways* gateways, size_t* num_gws) {
  return guarded([&] {
    need(gateways, "gateways");
    need(num_gws, "num_gws");
    *num_gws = gateways->value.num_gws();
  });
}

geosic_status geosic_evaluate(const geosic_channel* channel, const uint8_t* flags,
                              geosic_evaluator evaluator, geosic_scenario scenario,
                              double* rates, double* sum_rate) {
  return guarded([&] {
    need(channel, "channel");
    need(flags, "flags");
    const auto& ch = channel->value;
    const std::size_t n = ch.num_gps() * ch.num_gws();
    std::vector<std::uint8_t> bits(n);
    for (std::size_t d = 0; d < n; ++d) bits[d] = flags[d] != 0;
    const auto r = evaluate(ch, DecodingAssignment(ch.num_gps(), ch.num_gws(), bits),
                            mode_from(evaluator, scenario));
    if (rates) std::copy(r.rates.begin(), r.rates.end(), rates);
    if (sum_rate) *sum_rate = r.sum_rate;
  });
}

geosic_status geosic_search_space_size(unsigned num_gps, unsigned num_gws, char** decimal) {
  return guarded([&] {
    need(decimal, "decimal");
    *decimal = copy_string(search_space_size(num_gps, num_gws).str());
  });
}

void geosic_stage1_options_init(geosic_stage1_options* options) {
  if (!options) return;
  options->algorithm = "as";
  options->evaluator = GEOSIC_EVAL_FIXED_ORDER;
  options->scenario = GEOSIC_SCENARIO_INTERFERES;
  options->particles = 30;
  options->iterations = 30;
  options->temperature = 0.0;
  options->seed = 1;
  options->heuristic = nullptr;
}

geosic_status geosic_stage1_optimize(const geosic_channel* channel,
                                     const geosic_stage1_options* options, char** out) {
  return guarded([&] {
    need(channel, "channel");
    need(options, "options");
    need(out, "out");
    need(options->algorithm, "options.algorithm");
    const Algorithm algorithm = parse_algorithm(options->algorithm);
    SearchSettings settings;
    settings.mode = mode_from(options->evaluator, options->scenario);
    settings.heuristic = options->heuristic
                             ? parse_heuristic_mode(options->heuristic)
                             : default_heuristic(settings.mode.undecoded);
    BudgetPoint budget{options->particles, options->iterations, options->temperature};
    if (budget.temperature <= 0.0) {
      budget.temperature = static_cast<double>(budget.population * budget.iterations);
    }
    const auto trace =
        run_algorithm(algorithm, channel->value, budget, RngSeed{options->seed}, settings);
    const auto rates = evaluate(channel->value, trace.best, settings.mode);
    const json doc{{"algorithm", to_string(algorithm)},
                   {"evaluator", to_string(settings.mode.order)},
                   {"scenario", static_cast<int>(options->scenario)},
                   {"sum_rate", trace.best_sum_rate},
                   {"rates", rates.rates},
                   {"assignment", assignment_json(trace.best)},
                   {"evaluations", trace.evaluations},
                   {"wall_seconds", trace.wall_seconds},
                   {"trace", trace.best_per_iteration}};
    *out = copy_string(doc.dump());
  });
}

geosic_status geosic_stage2_solve(const geosic_gateways* gateways,
                                  geosic_stage2_problem problem, const double* weights,
                                  double total_cap_mw, char** out) {
  return guarded([&] {
    need(gateways, "gateways");
    need(out, "out");
    json doc;
    switch (problem) {
      case GEOSIC_STAGE2_MIN_TOTAL: doc = min_total_json(gateways->value); break;
      case GEOSIC_STAGE2_MIN_MAX: doc = min_max_json(gateways->value); break;
      case GEOSIC_STAGE2_WEIGHTED:
        doc = weighted_json(gateways->value, weights, total_cap_mw);
        break;
      default: fail(ErrorKind::invalid_argument, "unknown stage-2 problem code");
    }
    *out = copy_string(doc.dump());
  });
}

geosic_status geosic_experiment_run(const char* spec_path, char** out) {
  return guarded([&] {
    need(spec_path, "spec_path");
    need(out, "out");
    const auto result = run_experiment(ExperimentSpec::load(spec_path));
    json rows = json::array();
    for (const auto& s : result.summary) {
      json row{{"algorithm", to_string(s.algorithm)},
               {"M", s.budget.population},
               {"I", s.budget.iterations},
               {"T", s.budget.temperature},
               {"mean", s.mean},
               {"std", s.stddev}};
      if (s.mse) row["mse"] = *s.mse;
      rows.push_back(row);
    }
    json files = json::array();
    for (const auto& f : result.files) files.push_back(f.string());
    *out = copy_string(
        json{{"es_available", result.es_available}, {"summary", rows}, {"files", files}}
            .dump());
  });
}

geosic_status geosic_gw_sizing_run(const char* spec_path, double bandwidth_khz, char** out) {
  return guarded([&] {
    need(spec_path, "spec_path");
    need(out, "out");
    auto spec = GwSizingSpec::load(spec_path);
    if (bandwidth_khz > 0.0) spec.bandwidth_khz = bandwidth_khz;
    const auto result = run_gw_sizing(spec);
    json capacity = json::array();
    for (const auto& c : result.capacity) {
      capacity.push_back({{"algorithm", to_string(c.algorithm)},
                          {"num_gws", c.num_gws},
                          {"max_gps", c.max_gps ? json(*c.max_gps) : json(nullptr)}});
    }
    json files = json::array();
    for (const auto& f : result.files) files.push_back(f.string());
    *out = copy_string(json{{"capacity", capacity}, {"files", files}}.dump());
  });
}

}  // extern "C"
