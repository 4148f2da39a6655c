#include "ehsim/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "ehsim/errors.hpp"

namespace ehsim::bounds {

using numerics::kLn2;
using numerics::LogBase;
using numerics::Tolerance;

double transmitter_upper_bound(const model::ArrivalModel& arrivals) {
  const double sm = arrivals.second_moment();
  return 0.5 * std::log2(1.0 + std::sqrt(2.0 * sm));
}

double cfp_lower_bound_bernoulli(double p, double b_max, const Tolerance& tol) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("cfp_lower_bound_bernoulli: p must be in (0, 1)");
  }
  if (!(b_max >= 0.0) || !std::isfinite(b_max)) {
    throw std::domain_error("cfp_lower_bound_bernoulli: b_max must be finite and >= 0");
  }
  if (b_max == 0.0) return 0.0;
  const auto term = [p, b_max](int j) {
    const double w = p * std::pow(1.0 - p, j);
    return w * 0.5 * numerics::fading_log_moment(w * b_max, LogBase::bits);
  };
  return numerics::geometric_series_sum(term, 1.0 - p, tol);
}

double gap_constant_residual(double p, double k) {
  const double s = std::sqrt(2.0 * p) * k;
  const double lhs = 0.5 * std::log2(1.0 + s);
  const double rhs = 0.54 - 0.25 * std::log2(p) + (1.0 / (2.0 * kLn2)) / s +
                     ((1.0 - p) / (2.0 * p)) * std::log2(1.0 / (1.0 - p));
  return lhs - rhs;
}

double solve_gap_constant(double p, const Tolerance& tol) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("solve_gap_constant: p must be in (0, 1)");
  }
  const auto residual = [p](double k) { return gap_constant_residual(p, k); };
  return numerics::bisect_root(residual, 1e-6, 1e9, tol);
}

double bernoulli_gap_bound(double p, const Tolerance& tol) {
  // Worst case over battery sizes occurs at the fixed point k(p), where the
  // gap equals the common value of both sides of the defining equation.
  const double k = solve_gap_constant(p, tol);
  return 0.5 * std::log2(1.0 + std::sqrt(2.0 * p) * k);
}

double general_gap_bound(const model::ArrivalModel& arrivals) {
  const double delta = arrivals.median();
  if (!(delta > 0.0)) {
    throw std::domain_error("general_gap_bound: arrival median is degenerate (0)");
  }
  const double sm = arrivals.second_moment();
  return 1.67 + 0.25 * std::log2(sm / (delta * delta));
}

double cfp_general_intermediate_lb(double delta) {
  if (!(delta >= 0.0)) {
    throw std::domain_error("cfp_general_intermediate_lb: delta must be >= 0");
  }
  if (delta == 0.0) return 0.0;
  return std::max(0.0, 0.5 * std::log2(1.0 + delta) - 1.41);
}

CapacityBracket capacity_bracket(const model::ArrivalModel& arrivals, double c_input) {
  if (!(c_input >= 0.0)) {
    throw ConfigError("capacity_bracket: c_input must be >= 0");
  }
  CapacityBracket out;
  out.c_input = c_input;
  out.upper = transmitter_upper_bound(arrivals);
  const double delta = arrivals.median();
  const double sm = arrivals.second_moment();
  if (delta > 0.0 && sm > 0.0) {
    const double penalty = 0.25 * std::log2(sm / (delta * delta));
    out.lower = std::max(0.0, cfp_general_intermediate_lb(delta) - penalty - c_input);
  }
  return out;
}

double rx_upper_bound_general(const model::ArrivalModel& tx_arrivals, double q) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::domain_error("rx_upper_bound_general: q must be in [0, 1]");
  }
  const double sm = tx_arrivals.second_moment();
  return 2.0 * std::sqrt(q) * std::log2(1.0 + std::sqrt(2.0 * sm));
}

double rx_simple_lower_bound(double p, double q, double b_max, const Tolerance& tol) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::domain_error("rx_simple_lower_bound: q must be in [0, 1]");
  }
  if (q == 0.0) return 0.0;
  return q * cfp_lower_bound_bernoulli(p, b_max, tol);
}

UnitBatteryRxBound unit_battery_rx_upper_bound(double p, double q) {
  if (!(p > 0.0 && p <= 1.0) || !(q > 0.0 && q <= 1.0)) {
    throw std::domain_error("unit_battery_rx_upper_bound: p, q must be in (0, 1]");
  }
  const double m = std::min(p, q);
  UnitBatteryRxBound out;
  out.gamma_star = -std::log(m);
  // \int_{g}^inf ln(1+h) e^{-h} dh = e^{-g} (ln(1+g) + e^{1+g} E1(1+g)).
  const double g = out.gamma_star;
  const double tail_nats =
      std::exp(-g) * (std::log1p(g) + numerics::exp_scaled_e1(1.0 + g));
  out.t_ub = m * tail_nats / kLn2;
  return out;
}

double ctp_lower_bound_guarantee(double t_ub_rx) {
  if (!(t_ub_rx >= 0.0)) {
    throw std::domain_error("ctp_lower_bound_guarantee: bound must be >= 0");
  }
  return 0.5 * t_ub_rx;
}

BoundsReport bernoulli_bounds_report(double p, double energy, double b_max) {
  BoundsReport r;
  const auto arrivals = model::ArrivalModel::bernoulli(p, energy);
  r.t_ub = transmitter_upper_bound(arrivals);
  const double b_eff = std::min(energy, b_max);
  r.t_lb = cfp_lower_bound_bernoulli(p, b_eff);
  r.k = solve_gap_constant(p);
  r.gap_bound = bernoulli_gap_bound(p);
  r.branch = b_max <= std::sqrt(2.0) * r.k ? "b_max_le_k" : "b_max_gt_k";
  return r;
}

BoundsReport general_bounds_report(const model::ArrivalModel& arrivals, double b_max) {
  BoundsReport r;
  r.t_ub = transmitter_upper_bound(arrivals);
  const double delta = arrivals.median();
  if (!(delta > 0.0)) {
    throw ConfigError("bounds: arrival median is degenerate (0); no quantized schedule exists");
  }
  if (delta > b_max) {
    throw UnsupportedRegime("bounds: arrival median exceeds battery capacity");
  }
  r.t_lb = cfp_lower_bound_bernoulli(0.5, delta);
  r.gap_bound = general_gap_bound(arrivals);
  return r;
}

}  // namespace ehsim::bounds
