#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "ehsim/model.hpp"
#include "ehsim/sim.hpp"

namespace ehsim::cli {

using ordered_json = nlohmann::ordered_json;

// %.12g with C-locale formatting; the CSV number format.
std::string format_g12(double v);

// Arrival spec strings:
//   bernoulli:p=0.5,e=10
//   uniform:0,10
//   discrete:values=1|2|3,probs=0.25|0.25|0.5
model::ArrivalModel parse_arrival_spec(const std::string& spec);

struct BoundsOptions {
  std::string arrivals;          // spec string; optional for tx_rx
  std::string mode = "tx_only";  // tx_only | tx_rx
  double p = 0.5;                // tx_rx unit-battery rates
  double q = 0.5;
  double b_max = std::numeric_limits<double>::quiet_NaN();  // default: sup support
  double c_input = 0.0;
};
ordered_json bounds_json(const BoundsOptions& opt);

ordered_json solve_k_json(double p);

struct SimulateOptions {
  std::string arrivals = "bernoulli:p=0.5,e=1";
  std::string mode = "tx_only";    // tx_only | tx_rx
  std::string policy;              // cfp | cfp_quantized | greedy (default: by arrivals)
  std::string rx_policy = "ctp";   // ctp | simple
  double p = 0.5;
  double q = 0.5;
  double b_max = std::numeric_limits<double>::quiet_NaN();  // default: sup support
  double rx_on_cost = 1.0;
  double rx_b_max = std::numeric_limits<double>::quiet_NaN();  // default: on-cost
  std::string prefactor = "auto";  // auto | half | one
  std::uint64_t slots = 1'000'000;
  std::uint32_t reps = 20;
  std::uint64_t seed = 1;
  std::int64_t warmup = -1;        // -1: slots/100
  std::string ctp_gate = "latch_once";  // latch_once | relatch_after_tx
  double ctp_coin = std::numeric_limits<double>::quiet_NaN();  // default: q
  bool force_gate_open = false;
  bool want_trace = false;
};
sim::SimConfig make_sim_config(const SimulateOptions& opt);

// Manifest config snapshot: long-flag keys with fully resolved values, so
// writing "key=value" lines back to a --config file reproduces the run.
ordered_json simulate_flag_config(const SimulateOptions& opt,
                                  const sim::SimConfig& cfg);

struct SweepOptions {
  std::vector<std::string> kinds{"bernoulli"};  // bernoulli | uniform
  std::vector<double> p_grid{0.5};
  std::vector<double> b_grid{10.0};
  std::uint64_t slots = 1'000'000;
  std::uint32_t reps = 20;
  std::uint64_t seed = 1;
};

struct SweepResult {
  std::string csv;
  ordered_json rows;  // same content as the CSV, one object per row
};
SweepResult run_sweep(const SweepOptions& opt);

std::string trace_csv(const std::vector<sim::SlotRecord>& records);

// Relative paths resolve under $EHSIM_OUT_DIR when it is set.
std::string resolve_out_path(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Full command-line entry point (argv[0] is the program name). Returns the
// process exit code: 0 ok, 1 verification failure, 2 config error,
// 3 unsupported regime.
int run_main(int argc, const char* const* argv);

}  // namespace ehsim::cli
