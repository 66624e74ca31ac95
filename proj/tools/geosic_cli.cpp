// geosic command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "geosic/geosic.h"

namespace {

using nlohmann::json;

// Exit codes: 0 ok, 1 internal, 2 invalid input, 3 infeasible, 4 capacity.
int exit_code(geosic_status s) {
  switch (s) {
    case GEOSIC_OK: return 0;
    case GEOSIC_ERR_INVALID:
    case GEOSIC_ERR_PARSE:
    case GEOSIC_ERR_IO: return 2;
    case GEOSIC_ERR_INFEASIBLE:
    case GEOSIC_ERR_DECOMPOSITION: return 3;
    case GEOSIC_ERR_CAPACITY: return 4;
    case GEOSIC_ERR_INTERNAL: return 1;
  }
  return 1;
}

struct Failure {
  int code;
};

void check(geosic_status s) {
  if (s == GEOSIC_OK) return;
  std::cerr << "error: " << geosic_last_error() << '\n';
  throw Failure{exit_code(s)};
}

[[noreturn]] void usage_error(const std::string& what) {
  std::cerr << "error: " << what << '\n';
  throw Failure{2};
}

// Takes ownership of a library string.
std::string take(char* s) {
  std::string out(s ? s : "");
  geosic_string_free(s);
  return out;
}

void emit(const std::string& json_text, const std::string& out_path) {
  const std::string pretty = json::parse(json_text).dump(2);
  if (out_path.empty()) {
    std::cout << pretty << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) usage_error("cannot write " + out_path);
  out << pretty << '\n';
}

struct ChannelHandle {
  geosic_channel* p = nullptr;
  ~ChannelHandle() { geosic_channel_free(p); }
};

struct GatewaysHandle {
  geosic_gateways* p = nullptr;
  ~GatewaysHandle() { geosic_gateways_free(p); }
};

// "0.2,0.3,0.5" or a file holding a JSON array.
std::vector<double> read_weights(const std::string& arg) {
  std::ifstream file(arg);
  if (file) {
    try {
      return json::parse(file).get<std::vector<double>>();
    } catch (const json::exception& e) {
      usage_error("weights file " + arg + ": " + e.what());
    }
  }
  std::vector<double> out;
  std::stringstream ss(arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      usage_error("weights must be a comma list or a JSON file, got '" + arg + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage seismic acquisition optimizer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(geosic_version()));

  // gen
  auto* gen = app.add_subcommand("gen", "Draw a Rayleigh channel instance");
  std::size_t gen_k = 8, gen_n = 2;
  double gen_p = 1.0, gen_n0 = 1.0;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("-K,--gps", gen_k, "Number of geophones")->capture_default_str();
  gen->add_option("-N,--gws", gen_n, "Number of gateways")->capture_default_str();
  gen->add_option("--p-mw", gen_p, "Geophone transmit power (mW)")->capture_default_str();
  gen->add_option("--n0-mw", gen_n0, "Noise power (mW)")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Channel seed")->capture_default_str();
  gen->add_option("-o,--out", gen_out, "Output instance file")->required();

  // stage1
  auto* stage1 = app.add_subcommand("stage1", "Geophone decoding assignment");
  stage1->require_subcommand(1);
  auto* optimize = stage1->add_subcommand("optimize", "Search for the best assignment");
  std::string s1_instance, s1_algo = "as", s1_eval = "fixed-order", s1_heuristic, s1_out;
  int s1_scenario = 1;
  std::size_t s1_m = 30, s1_i = 30;
  double s1_t = 0.0;
  std::uint64_t s1_seed = 1;
  optimize->add_option("--instance", s1_instance, "Channel instance file")->required();
  optimize->add_option("--algo", s1_algo, "es|dpso|ampso|as|mmas|sa|baseline")
      ->capture_default_str();
  optimize->add_option("--evaluator", s1_eval, "fixed-order|lp")->capture_default_str();
  optimize->add_option("--scenario", s1_scenario, "1: undecoded interfere, 2: silent")
      ->capture_default_str();
  optimize->add_option("--particles,-M", s1_m, "Population size M")->capture_default_str();
  optimize->add_option("--iters,-I", s1_i, "Iterations I")->capture_default_str();
  optimize->add_option("--temperature,-T", s1_t, "SA start temperature (default M*I)");
  optimize->add_option("--heuristic", s1_heuristic,
                       "none|gw-average|gp-deactivation (default by scenario)");
  optimize->add_option("--seed", s1_seed, "Search seed")->capture_default_str();
  optimize->add_option("-o,--out", s1_out, "Write the JSON result here");

  auto* space = stage1->add_subcommand("space-size", "Size of the assignment space");
  unsigned sp_k = 3, sp_n = 2;
  space->add_option("-K,--gps", sp_k)->required();
  space->add_option("-N,--gws", sp_n)->required();

  // stage2
  auto* stage2 = app.add_subcommand("stage2", "Gateway power allocation");
  stage2->require_subcommand(1);
  std::string s2_instance, s2_weights, s2_out;
  double s2_cap = 0.0;
  auto add_stage2 = [&](const char* name, const char* help) {
    auto* cmd = stage2->add_subcommand(name, help);
    cmd->add_option("--instance", s2_instance, "Gateway instance file")->required();
    cmd->add_option("-o,--out", s2_out, "Write the JSON result here");
    return cmd;
  };
  auto* min_total = add_stage2("min-total", "Minimum total power");
  auto* min_max = add_stage2("min-max", "Minimum peak power plus time-sharing schedule");
  auto* weighted = add_stage2("weighted", "Maximum weighted sum-rate under a power budget");
  weighted->add_option("--weights", s2_weights, "Comma list or JSON file (default Q/sum Q)");
  weighted->add_option("--total-cap-mw", s2_cap, "Total power budget (default from instance)");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Multi-seed campaigns");
  experiment->require_subcommand(1);
  std::string spec_path;
  auto* run = experiment->add_subcommand("run", "Algorithm comparison campaign");
  run->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  auto* sizing = experiment->add_subcommand("gw-sizing", "Geophones per gateway sweep");
  sizing->add_option("spec", spec_path, "Sizing spec (JSON)")->required();
  double bandwidth_khz = 0.0;
  sizing->add_option("--bandwidth-khz", bandwidth_khz,
                     "Bandwidth for the bps/Hz to kbps conversion (default from spec)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      ChannelHandle ch;
      check(geosic_channel_generate(gen_k, gen_n, gen_p, gen_n0, gen_seed, &ch.p));
      check(geosic_channel_save(ch.p, gen_out.c_str()));
      std::cout << "wrote " << gen_out << '\n';
    } else if (optimize->parsed()) {
      ChannelHandle ch;
      check(geosic_channel_load(s1_instance.c_str(), &ch.p));
      geosic_stage1_options opt;
      geosic_stage1_options_init(&opt);
      opt.algorithm = s1_algo.c_str();
      if (s1_eval == "fixed-order") {
        opt.evaluator = GEOSIC_EVAL_FIXED_ORDER;
      } else if (s1_eval == "lp") {
        opt.evaluator = GEOSIC_EVAL_LP;
      } else {
        usage_error("unknown evaluator '" + s1_eval + "' (fixed-order|lp)");
      }
      opt.scenario = static_cast<geosic_scenario>(s1_scenario);
      opt.particles = s1_m;
      opt.iterations = s1_i;
      opt.temperature = s1_t;
      opt.seed = s1_seed;
      opt.heuristic = s1_heuristic.empty() ? nullptr : s1_heuristic.c_str();
      char* out = nullptr;
      check(geosic_stage1_optimize(ch.p, &opt, &out));
      emit(take(out), s1_out);
    } else if (space->parsed()) {
      char* out = nullptr;
      check(geosic_search_space_size(sp_k, sp_n, &out));
      std::cout << take(out) << '\n';
    } else if (stage2->parsed()) {
      GatewaysHandle gw;
      check(geosic_gateways_load(s2_instance.c_str(), &gw.p));
      char* out = nullptr;
      if (min_total->parsed()) {
        check(geosic_stage2_solve(gw.p, GEOSIC_STAGE2_MIN_TOTAL, nullptr, 0.0, &out));
      } else if (min_max->parsed()) {
        check(geosic_stage2_solve(gw.p, GEOSIC_STAGE2_MIN_MAX, nullptr, 0.0, &out));
      } else {
        std::optional<std::vector<double>> w;
        if (!s2_weights.empty()) {
          w = read_weights(s2_weights);
          std::size_t n = 0;
          check(geosic_gateways_dims(gw.p, &n));
          if (w->size() != n) {
            usage_error("expected " + std::to_string(n) + " weights, got " +
                        std::to_string(w->size()));
          }
        }
        check(geosic_stage2_solve(gw.p, GEOSIC_STAGE2_WEIGHTED, w ? w->data() : nullptr,
                                  s2_cap, &out));
      }
      emit(take(out), s2_out);
    } else if (run->parsed()) {
      char* out = nullptr;
      check(geosic_experiment_run(spec_path.c_str(), &out));
      emit(take(out), "");
    } else if (sizing->parsed()) {
      char* out = nullptr;
      check(geosic_gw_sizing_run(spec_path.c_str(), bandwidth_khz, &out));
      emit(take(out), "");
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
