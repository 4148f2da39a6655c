#include "ehsim/policies.hpp"

#include <algorithm>
#include <cmath>

#include "ehsim/errors.hpp"

namespace ehsim::policies {

CfpPolicy::CfpPolicy(double p_eff, double effective_b_max)
    : p_eff_(p_eff), b_eff_(effective_b_max) {
  if (!(p_eff > 0.0 && p_eff < 1.0)) {
    throw ConfigError("cfp: schedule fraction must be in (0, 1)");
  }
  if (!(effective_b_max > 0.0) || !std::isfinite(effective_b_max)) {
    throw ConfigError("cfp: effective battery size must be positive and finite");
  }
  scheduled_ = p_eff_ * b_eff_;
}

double CfpPolicy::decide(const model::Battery& battery) const {
  return std::min(battery.level(), scheduled_);
}

void CfpPolicy::on_slot(bool epoch) {
  if (epoch) {
    j_ = 0;
    scheduled_ = p_eff_ * b_eff_;
  } else {
    ++j_;
    scheduled_ *= 1.0 - p_eff_;
  }
}

double cfp_effective_b_max(double energy, double b_max) {
  if (!(energy > 0.0) || !(b_max > 0.0)) {
    throw ConfigError("cfp: energy and b_max must be positive");
  }
  return std::min(energy, b_max);
}

QuantizedCfp cfp_general_wrap(const model::ArrivalModel& arrivals, double b_max) {
  const double delta = arrivals.median();
  if (!(delta > 0.0)) {
    throw ConfigError("cfp: arrival median is degenerate (0); no quantized schedule exists");
  }
  if (delta > b_max) {
    throw UnsupportedRegime("cfp: arrival median exceeds battery capacity");
  }
  return QuantizedCfp{
      delta,
      arrivals.quantize_inclusive(delta),
      model::ArrivalModel::bernoulli(0.5, delta),
      CfpPolicy(0.5, delta),
  };
}

bool threshold_receiver_decide(const model::Battery& battery, double h,
                               double gamma, double on_cost) {
  return battery.level() >= on_cost && h > gamma;
}

CtpTransmitter::CtpTransmitter(double coin_prob, double gamma_star, CtpGateMode mode)
    : coin_prob_(coin_prob), gamma_star_(gamma_star), mode_(mode) {
  if (!(coin_prob >= 0.0 && coin_prob <= 1.0)) {
    throw ConfigError("ctp: coin probability must be in [0, 1]");
  }
  if (!(gamma_star >= 0.0)) {
    throw ConfigError("ctp: threshold must be >= 0");
  }
}

double CtpTransmitter::decide(const model::Battery& battery, double h,
                              model::RngStream& coin) {
  if (!gate_open_ && coin.coin(coin_prob_)) gate_open_ = true;
  if (gate_open_ && battery.level() >= 1.0 && h > gamma_star_) {
    if (mode_ == CtpGateMode::relatch_after_tx) gate_open_ = false;
    return 1.0;
  }
  return 0.0;
}

}  // namespace ehsim::policies
