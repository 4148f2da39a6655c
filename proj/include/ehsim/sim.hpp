#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ehsim/model.hpp"
#include "ehsim/policies.hpp"

namespace ehsim::sim {

enum class Mode { tx_only, tx_rx };
enum class Prefactor { half, one };
enum class TxPolicyKind { cfp, cfp_quantized, greedy };
enum class RxPolicyKind { ctp, simple };

inline constexpr std::uint64_t kAutoWarmup =
    std::numeric_limits<std::uint64_t>::max();

struct SimConfig {
  std::uint64_t n_slots = 1'000'000;
  std::uint32_t n_replications = 20;
  std::uint64_t warmup_slots = kAutoWarmup;  // sentinel: n_slots / 100
  std::uint64_t seed = 1;

  Mode mode = Mode::tx_only;
  TxPolicyKind tx_policy = TxPolicyKind::cfp;
  model::ArrivalModel arrivals{};  // transmitter side (tx_only / simple rx)
  double b_max = 1.0;

  // Rate prefactor; defaults to half except in the common-threshold mode,
  // whose reference expressions carry no 1/2.
  std::optional<Prefactor> prefactor;

  // tx_rx settings. The common-threshold (ctp) mode runs unit batteries and
  // unit Bernoulli(p)/Bernoulli(q) arrivals on the two sides; the simple
  // mode runs any transmitter policy against a receiver that listens
  // whenever it can pay its on-cost.
  RxPolicyKind rx_policy = RxPolicyKind::ctp;
  double p = 0.5;
  double q = 0.5;
  double rx_on_cost = 1.0;
  double rx_b_max = 1.0;
  policies::CtpGateMode ctp_gate = policies::CtpGateMode::latch_once;
  std::optional<double> ctp_coin;  // gate coin probability; defaults to q
  bool force_gate_open = false;    // diagnostic: skip the startup latch

  // Instrumentation (replication 0 only).
  std::uint64_t trace_slots = 0;      // per-slot records for the first N slots
  bool collect_spend_trace = false;   // post-warmup spend sequence

  unsigned threads = 0;  // 0 = hardware concurrency
};

struct SlotRecord {
  std::uint64_t slot = 0;
  double h = 0.0;
  double spend = 0.0;
  double battery_tx = 0.0;  // level observed at decision time
  double battery_rx = std::numeric_limits<double>::quiet_NaN();
  double rate = 0.0;
};

struct EstimateExtras {
  std::uint64_t epoch_count = 0;
  double mean_inter_epoch_time = std::numeric_limits<double>::quiet_NaN();
  double fkg_lhs = std::numeric_limits<double>::quiet_NaN();  // lag-1 E[P_t P_{t+1}]
  double fkg_rhs = std::numeric_limits<double>::quiet_NaN();  // (E[P])^2
  double spend_second_moment = std::numeric_limits<double>::quiet_NaN();
  double joint_on_fraction = std::numeric_limits<double>::quiet_NaN();   // tx_rx
  double h_above_gamma_fraction = std::numeric_limits<double>::quiet_NaN();  // ctp
  std::uint64_t slots_simulated = 0;  // all replications, incl. warmup
};

struct ThroughputEstimate {
  double mean = 0.0;     // bits/slot
  double std_err = 0.0;  // across replications
  std::uint64_t n_effective = 0;  // measured slots (post-warmup, all reps)
  EstimateExtras extras;
  std::vector<SlotRecord> trace;       // nonempty iff trace_slots > 0
  std::vector<double> spend_trace;     // nonempty iff collect_spend_trace
};

std::uint64_t resolved_warmup(const SimConfig& cfg);
Prefactor resolved_prefactor(const SimConfig& cfg);

ThroughputEstimate run(const SimConfig& cfg);

struct FkgTerms {
  double lhs = 0.0;          // mean of P_t P_{t+lag}
  double rhs = 0.0;          // (mean of P)^2
  double lhs_std_err = 0.0;  // standard error of the product mean
};

// Lagged spend-product estimate; requires at least 10*lag samples.
FkgTerms estimate_fkg_terms(const std::vector<double>& spends, std::size_t lag);

// Checks the empirical E[P^2] against the arrival second moment (the
// energy-neutral ceiling) within 3 standard errors.
bool empirical_second_moment_within_bound(const std::vector<double>& spends,
                                          const model::ArrivalModel& arrivals);

}  // namespace ehsim::sim
