#pragma once

#include "ehsim/model.hpp"

namespace ehsim::policies {

// Battery-fraction transmit schedule: on the j-th slot after an energy
// epoch, spend p(1-p)^j * b_eff (never more than the battery holds). The
// schedule telescopes so the battery is never overdrawn even if no further
// energy arrives.
class CfpPolicy {
 public:
  CfpPolicy(double p_eff, double effective_b_max);

  // Amount to spend this slot given the observed battery.
  double decide(const model::Battery& battery) const;

  // Advance the schedule after the slot resolves; epoch = true restarts it.
  void on_slot(bool epoch);

  int j() const { return j_; }
  double p_eff() const { return p_eff_; }
  double effective_b_max() const { return b_eff_; }
  double scheduled_spend() const { return scheduled_; }

 private:
  double p_eff_;
  double b_eff_;
  double scheduled_;
  int j_ = 0;
};

// Battery size the schedule should plan against when arrivals deliver
// `energy` into a physical buffer of size b_max.
double cfp_effective_b_max(double energy, double b_max);

// Median-quantized adapter: run the schedule as if arrivals were
// Bernoulli(1/2, delta) with delta the upper median; only a delta quantum of
// any qualifying arrival is banked by the schedule.
struct QuantizedCfp {
  double delta = 0.0;
  bool inclusive = false;  // arrival counts when X >= delta (vs strict >)
  model::ArrivalModel effective;  // Bernoulli(1/2, delta)
  CfpPolicy policy;

  bool counts_as_arrival(double x) const {
    return inclusive ? x >= delta : x > delta;
  }
};

// Throws ConfigError when the median is degenerate and UnsupportedRegime
// when it exceeds the battery capacity.
QuantizedCfp cfp_general_wrap(const model::ArrivalModel& arrivals, double b_max);

// Receiver side of the common-threshold rule: on iff it can pay the
// listening cost and the fade clears the threshold.
bool threshold_receiver_decide(const model::Battery& battery, double h,
                               double gamma, double on_cost = 1.0);

enum class CtpGateMode {
  latch_once,        // wait for the first successful coin, transmit ever after
  relatch_after_tx,  // gate re-arms after every transmission
};

// Transmitter side of the common-threshold rule over a unit battery: a
// simulated coin opens the gate, after which it transmits its unit whenever
// the battery is full and the fade clears gamma*.
class CtpTransmitter {
 public:
  CtpTransmitter(double coin_prob, double gamma_star,
                 CtpGateMode mode = CtpGateMode::latch_once);

  // Returns the energy spent this slot (0 or 1).
  double decide(const model::Battery& battery, double h, model::RngStream& coin);

  bool gate_open() const { return gate_open_; }
  void force_gate_open() { gate_open_ = true; }
  double gamma_star() const { return gamma_star_; }

 private:
  double coin_prob_;
  double gamma_star_;
  CtpGateMode mode_;
  bool gate_open_ = false;
};

}  // namespace ehsim::policies
