#pragma once

#include <limits>
#include <string>

#include "ehsim/model.hpp"
#include "ehsim/numerics.hpp"

namespace ehsim::bounds {

// All public bounds are in bits per slot.

// Half-duplex AWGN-style ceiling from the arrival second moment:
//   T_ub = 1/2 log2(1 + sqrt(2 E[X^2])).
double transmitter_upper_bound(const model::ArrivalModel& arrivals);

// Achievable rate of the battery-fraction schedule under Bernoulli(p)
// refills of a battery of size b_max:
//   sum_j p(1-p)^j * 1/2 \int_0^inf log2(1 + h p(1-p)^j b_max) e^{-h} dh.
double cfp_lower_bound_bernoulli(double p, double b_max,
                                 const numerics::Tolerance& tol = {});

// Residual of the fixed-point equation defining the gap constant k(p)
// (all logs base 2):
//   1/2 log2(1 + sqrt(2p) k) - [0.54 - 1/4 log2 p
//     + (1/(2 ln 2)) / (sqrt(2p) k) + ((1-p)/(2p)) log2(1/(1-p))].
double gap_constant_residual(double p, double k);

// k(p): the root of gap_constant_residual in [1e-6, 1e9].
double solve_gap_constant(double p, const numerics::Tolerance& tol = {});

// Worst-case ceiling-to-achievable gap for Bernoulli(p) arrivals, valid for
// every battery size: 1/2 log2(1 + sqrt(2p) k(p)) - 1/2 log2(sqrt(2p) k(p)) +
// analysis slack, folded into the closed form below.
double bernoulli_gap_bound(double p, const numerics::Tolerance& tol = {});

// Gap guarantee for a general arrival law, via median quantization:
//   1.67 + 1/4 log2(E[X^2] / delta^2), delta = upper median.
double general_gap_bound(const model::ArrivalModel& arrivals);

// Guaranteed rate of the quantized schedule before the moment-ratio
// penalty: max(0, 1/2 log2(1 + delta) - 1.41).
double cfp_general_intermediate_lb(double delta);

struct CapacityBracket {
  double lower = 0.0;   // bits/slot, clamped at 0
  double upper = 0.0;   // bits/slot
  double c_input = 0.0; // user-supplied coding constant (>= 0)
};

// Two-sided capacity estimate for a general arrival law. The lower edge
// subtracts the caller-supplied coding constant c (0 by default, in which
// case it is optimistic).
CapacityBracket capacity_bracket(const model::ArrivalModel& arrivals,
                                 double c_input = 0.0);

// Receiver-side ceiling when the receiver also harvests (on-fraction
// sqrt(q) optimized): 2 sqrt(q) log2(1 + sqrt(2 E[X^2])).
double rx_upper_bound_general(const model::ArrivalModel& tx_arrivals, double q);

// Receiver-on fraction q times the transmitter-side achievable rate.
double rx_simple_lower_bound(double p, double q, double b_max,
                             const numerics::Tolerance& tol = {});

struct UnitBatteryRxBound {
  double t_ub = 0.0;        // bits/slot
  double gamma_star = 0.0;  // fade threshold, exp(-gamma_star) = min(p, q)
};

// Unit-battery two-sided system ceiling:
//   min(p,q) * \int_{gamma*}^inf log2(1+h) e^{-h} dh, gamma* = -ln min(p,q).
UnitBatteryRxBound unit_battery_rx_upper_bound(double p, double q);

// The common-threshold schedule achieves at least half the unit-battery
// ceiling.
double ctp_lower_bound_guarantee(double t_ub_rx);

struct BoundsReport {
  double t_ub = 0.0;
  double t_lb = 0.0;
  double gap_bound = 0.0;
  double k = std::numeric_limits<double>::quiet_NaN();  // Bernoulli path only
  std::string branch;  // "b_max_le_k" | "b_max_gt_k" | "" (non-Bernoulli)
};

// Bernoulli path: exact-p schedule and the k(p)-based gap.
BoundsReport bernoulli_bounds_report(double p, double energy, double b_max);

// General path: median-quantized schedule and the moment-ratio gap.
// Throws UnsupportedRegime when the median exceeds b_max.
BoundsReport general_bounds_report(const model::ArrivalModel& arrivals,
                                   double b_max);

}  // namespace ehsim::bounds
