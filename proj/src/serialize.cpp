#include "ehsim/serialize.hpp"

#include <cmath>

#include "json.hpp"

namespace ehsim::serialize {

using ordered_json = nlohmann::ordered_json;

namespace {

const char* mode_name(sim::Mode m) {
  return m == sim::Mode::tx_only ? "tx_only" : "tx_rx";
}

const char* tx_policy_name(sim::TxPolicyKind k) {
  switch (k) {
    case sim::TxPolicyKind::cfp: return "cfp";
    case sim::TxPolicyKind::cfp_quantized: return "cfp_quantized";
    case sim::TxPolicyKind::greedy: return "greedy";
  }
  return "?";
}

void put_if_finite(ordered_json& j, const char* key, double v) {
  if (std::isfinite(v)) j[key] = v;
}

}  // namespace

std::string estimate_json(const sim::SimConfig& cfg,
                          const sim::ThroughputEstimate& est) {
  ordered_json j;
  j["schema_version"] = 1;
  j["kind"] = "throughput_estimate";

  ordered_json c;
  c["mode"] = mode_name(cfg.mode);
  const bool ctp = cfg.mode == sim::Mode::tx_rx && cfg.rx_policy == sim::RxPolicyKind::ctp;
  if (ctp) {
    c["rx_policy"] = "ctp";
    c["p"] = cfg.p;
    c["q"] = cfg.q;
    c["ctp_coin"] = cfg.ctp_coin.value_or(cfg.q);
    c["ctp_gate"] = cfg.ctp_gate == policies::CtpGateMode::latch_once
                        ? "latch_once"
                        : "relatch_after_tx";
    if (cfg.force_gate_open) c["force_gate_open"] = true;
  } else {
    c["policy"] = tx_policy_name(cfg.tx_policy);
    c["arrivals"] = cfg.arrivals.describe();
    c["b_max"] = cfg.b_max;
    if (cfg.mode == sim::Mode::tx_rx) {
      c["rx_policy"] = "simple";
      c["q"] = cfg.q;
      c["rx_on_cost"] = cfg.rx_on_cost;
      c["rx_b_max"] = cfg.rx_b_max;
    }
  }
  c["slots"] = cfg.n_slots;
  c["reps"] = cfg.n_replications;
  c["warmup_slots"] = sim::resolved_warmup(cfg);
  c["seed"] = cfg.seed;
  c["prefactor"] =
      sim::resolved_prefactor(cfg) == sim::Prefactor::half ? "half" : "one";
  j["config"] = c;

  j["mean_bits_per_slot"] = est.mean;
  j["std_err"] = est.std_err;
  j["n_effective"] = est.n_effective;

  ordered_json ex;
  ex["epoch_count"] = est.extras.epoch_count;
  put_if_finite(ex, "mean_inter_epoch_time", est.extras.mean_inter_epoch_time);
  put_if_finite(ex, "fkg_lhs", est.extras.fkg_lhs);
  put_if_finite(ex, "fkg_rhs", est.extras.fkg_rhs);
  put_if_finite(ex, "spend_second_moment", est.extras.spend_second_moment);
  put_if_finite(ex, "joint_on_fraction", est.extras.joint_on_fraction);
  put_if_finite(ex, "h_above_gamma_fraction", est.extras.h_above_gamma_fraction);
  ex["slots_simulated"] = est.extras.slots_simulated;
  j["extras"] = ex;

  return j.dump(2) + "\n";
}

std::string acceptance_report_json(const verify::Report& report) {
  ordered_json j;
  j["schema_version"] = 1;
  j["kind"] = "acceptance_report";
  j["seed"] = report.seed;
  j["total_slots"] = report.total_slots;
  j["all_pass"] = report.all_pass;
  ordered_json arr = ordered_json::array();
  for (const auto& c : report.criteria) {
    ordered_json cj;
    cj["id"] = c.id;
    cj["name"] = c.name;
    cj["pass"] = c.pass;
    cj["detail"] = c.detail;
    cj["seconds"] = c.seconds;
    arr.push_back(cj);
  }
  j["criteria"] = arr;
  return j.dump(2) + "\n";
}

}  // namespace ehsim::serialize
