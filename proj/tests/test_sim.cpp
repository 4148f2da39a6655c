#include <cmath>
#include <vector>

#include "doctest.h"
#include "ehsim/bounds.hpp"
#include "ehsim/errors.hpp"
#include "ehsim/numerics.hpp"
#include "ehsim/sim.hpp"

using namespace ehsim;
using model::ArrivalModel;

namespace {

sim::SimConfig base_cfp_config() {
  sim::SimConfig cfg;
  cfg.n_slots = 200000;
  cfg.n_replications = 10;
  cfg.seed = 20240901;
  cfg.mode = sim::Mode::tx_only;
  cfg.tx_policy = sim::TxPolicyKind::cfp;
  cfg.arrivals = ArrivalModel::bernoulli(0.5, 10.0);
  cfg.b_max = 10.0;
  return cfg;
}

}  // namespace

TEST_CASE("identical configs produce bitwise-identical estimates") {
  auto cfg = base_cfp_config();
  cfg.n_slots = 50000;
  cfg.n_replications = 4;
  cfg.trace_slots = 64;
  cfg.collect_spend_trace = true;
  const auto a = sim::run(cfg);
  const auto b = sim::run(cfg);
  CHECK(a.mean == b.mean);
  CHECK(a.std_err == b.std_err);
  CHECK(a.n_effective == b.n_effective);
  CHECK(a.extras.epoch_count == b.extras.epoch_count);
  CHECK(a.extras.fkg_lhs == b.extras.fkg_lhs);
  CHECK(a.extras.spend_second_moment == b.extras.spend_second_moment);
  REQUIRE(a.trace.size() == 64);
  REQUIRE(b.trace.size() == 64);
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].h == b.trace[i].h);
    CHECK(a.trace[i].spend == b.trace[i].spend);
    CHECK(a.trace[i].rate == b.trace[i].rate);
  }
  REQUIRE(a.spend_trace.size() == b.spend_trace.size());
  CHECK(a.spend_trace == b.spend_trace);

  auto other = cfg;
  other.seed = cfg.seed + 1;
  const auto c = sim::run(other);
  CHECK(c.mean != a.mean);
}

TEST_CASE("battery-fraction schedule matches its analytic rate") {
  auto cfg = base_cfp_config();
  const auto est = sim::run(cfg);
  const double target = 0.81687763723063982;
  CHECK(std::fabs(est.mean - target) <= 3.0 * est.std_err);
  const double t_ub = bounds::transmitter_upper_bound(cfg.arrivals);
  CHECK(est.mean <= t_ub + 3.0 * est.std_err);
  CHECK(est.n_effective ==
        (cfg.n_slots - sim::resolved_warmup(cfg)) * cfg.n_replications);
}

TEST_CASE("epoch bookkeeping: Bernoulli(1/2) arrivals recur every 2 slots") {
  auto cfg = base_cfp_config();
  cfg.n_slots = 100000;
  cfg.n_replications = 4;
  const auto est = sim::run(cfg);
  CHECK(est.extras.epoch_count > 0);
  CHECK(std::fabs(est.extras.mean_inter_epoch_time - 2.0) < 0.05);
}

TEST_CASE("no energy means no throughput") {
  sim::SimConfig cfg;
  cfg.n_slots = 20000;
  cfg.n_replications = 3;
  cfg.tx_policy = sim::TxPolicyKind::greedy;
  cfg.arrivals = ArrivalModel::bernoulli(0.0, 5.0);
  cfg.b_max = 5.0;
  const auto est = sim::run(cfg);
  CHECK(est.mean == 0.0);
  CHECK(est.std_err == 0.0);
}

TEST_CASE("spend sequence is positively associated at lag 1") {
  // For the battery-fraction schedule on Bernoulli(1/2, 10) the stationary
  // spend is P = 5 (1/2)^J with J geometric; closed forms:
  //   E[P] = 10/3, (E[P])^2 = 100/9, E[P^2] = 100/7,
  //   E[P_t P_{t+1}] = 250/21 > 100/9.
  auto cfg = base_cfp_config();
  cfg.n_slots = 400000;
  cfg.n_replications = 8;
  const auto est = sim::run(cfg);
  CHECK(std::fabs(est.extras.fkg_rhs - 100.0 / 9.0) < 0.15);
  CHECK(std::fabs(est.extras.fkg_lhs - 250.0 / 21.0) < 0.25);
  CHECK(std::fabs(est.extras.spend_second_moment - 100.0 / 7.0) < 0.25);
  CHECK(est.extras.fkg_lhs >= est.extras.fkg_rhs);
}

TEST_CASE("lagged product estimator on synthetic traces") {
  // Constant trace: both sides equal c^2 exactly.
  std::vector<double> constant(1000, 3.0);
  const auto ct = sim::estimate_fkg_terms(constant, 1);
  CHECK(ct.lhs == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(ct.rhs == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(ct.lhs_std_err == 0.0);

  // Independent coin spends: lhs and rhs agree within sampling error.
  model::RngStream rng(17, model::Stream::policy_coin, 0);
  std::vector<double> coins(200000);
  for (auto& c : coins) c = rng.coin(0.5) ? 2.0 : 0.0;
  const auto it = sim::estimate_fkg_terms(coins, 1);
  CHECK(std::fabs(it.lhs - it.rhs) < 4.0 * it.lhs_std_err + 1e-3);

  CHECK_THROWS_AS((void)sim::estimate_fkg_terms(std::vector<double>(5, 1.0), 1),
                  std::invalid_argument);
}

TEST_CASE("spend second moment respects the arrival second moment") {
  auto cfg = base_cfp_config();
  cfg.n_slots = 100000;
  cfg.n_replications = 2;
  cfg.collect_spend_trace = true;
  const auto est = sim::run(cfg);
  REQUIRE_FALSE(est.spend_trace.empty());
  // E[P^2] = 100/7 < 50 = E[X^2]: the schedule is well inside the ceiling.
  CHECK(sim::empirical_second_moment_within_bound(est.spend_trace, cfg.arrivals));
  // A trace hotter than the arrival second moment allows must fail the check.
  std::vector<double> hot(5000, 7.2);  // 7.2^2 = 51.84 > 50
  CHECK_FALSE(sim::empirical_second_moment_within_bound(hot, cfg.arrivals));
}

TEST_CASE("quantized schedule on uniform arrivals hits its analytic rate") {
  sim::SimConfig cfg;
  cfg.n_slots = 200000;
  cfg.n_replications = 10;
  cfg.seed = 777;
  cfg.tx_policy = sim::TxPolicyKind::cfp_quantized;
  cfg.arrivals = ArrivalModel::uniform(0.0, 10.0);
  cfg.b_max = 10.0;
  const auto est = sim::run(cfg);
  // Quantization runs the schedule as Bernoulli(1/2, 5).
  const double target = bounds::cfp_lower_bound_bernoulli(0.5, 5.0);
  CHECK(std::fabs(est.mean - target) <= 3.0 * est.std_err);
}

TEST_CASE("receiver that never has energy kills throughput") {
  sim::SimConfig cfg;
  cfg.n_slots = 20000;
  cfg.n_replications = 3;
  cfg.mode = sim::Mode::tx_rx;
  cfg.rx_policy = sim::RxPolicyKind::ctp;
  cfg.p = 0.5;
  cfg.q = 0.0;
  const auto est = sim::run(cfg);
  CHECK(est.mean == 0.0);
}

TEST_CASE("common-threshold mode clears its guarantee") {
  sim::SimConfig cfg;
  cfg.n_slots = 200000;
  cfg.n_replications = 10;
  cfg.seed = 4242;
  cfg.mode = sim::Mode::tx_rx;
  cfg.rx_policy = sim::RxPolicyKind::ctp;
  cfg.p = 0.5;
  cfg.q = 0.5;
  const auto est = sim::run(cfg);
  const auto ub = bounds::unit_battery_rx_upper_bound(0.5, 0.5);
  CHECK(est.mean >= bounds::ctp_lower_bound_guarantee(ub.t_ub) - 3.0 * est.std_err);
  CHECK(est.mean <= ub.t_ub + 3.0 * est.std_err);
  // The fade clears gamma* = ln 2 with probability exactly 1/2.
  CHECK(std::fabs(est.extras.h_above_gamma_fraction - 0.5) < 0.01);
  CHECK(est.extras.joint_on_fraction >= 0.0);
  CHECK(est.extras.joint_on_fraction <= 1.0);
}

TEST_CASE("simple receiver scales the transmitter rate by its on fraction") {
  sim::SimConfig cfg;
  cfg.n_slots = 200000;
  cfg.n_replications = 10;
  cfg.seed = 31337;
  cfg.mode = sim::Mode::tx_rx;
  cfg.rx_policy = sim::RxPolicyKind::simple;
  cfg.tx_policy = sim::TxPolicyKind::cfp;
  cfg.arrivals = ArrivalModel::bernoulli(0.5, 10.0);
  cfg.b_max = 10.0;
  cfg.q = 0.5;
  cfg.rx_on_cost = 1.0;
  cfg.rx_b_max = 1.0;
  const auto est = sim::run(cfg);
  const double target = bounds::rx_simple_lower_bound(0.5, 0.5, 10.0);
  CHECK(std::fabs(est.mean - target) <= 3.0 * est.std_err);
  CHECK(est.extras.joint_on_fraction > 0.4);
}

TEST_CASE("config validation") {
  auto cfg = base_cfp_config();
  cfg.warmup_slots = cfg.n_slots;  // nothing left to measure
  CHECK_THROWS_AS((void)sim::run(cfg), ConfigError);

  auto cfg2 = base_cfp_config();
  cfg2.arrivals = ArrivalModel::uniform(0.0, 10.0);  // exact schedule needs Bernoulli
  CHECK_THROWS_AS((void)sim::run(cfg2), ConfigError);

  sim::SimConfig cfg3;
  cfg3.mode = sim::Mode::tx_rx;
  cfg3.rx_policy = sim::RxPolicyKind::ctp;
  cfg3.p = 1.5;
  CHECK_THROWS_AS((void)sim::run(cfg3), ConfigError);

  sim::SimConfig cfg4;
  cfg4.mode = sim::Mode::tx_rx;
  cfg4.rx_policy = sim::RxPolicyKind::simple;
  cfg4.arrivals = ArrivalModel::bernoulli(0.5, 10.0);
  cfg4.b_max = 10.0;
  cfg4.rx_on_cost = 2.0;
  cfg4.rx_b_max = 1.0;  // can never afford to listen
  CHECK_THROWS_AS((void)sim::run(cfg4), ConfigError);
}

TEST_CASE("per-slot trace is faithful") {
  auto cfg = base_cfp_config();
  cfg.n_slots = 5000;
  cfg.n_replications = 2;
  cfg.trace_slots = 100;
  const auto est = sim::run(cfg);
  REQUIRE(est.trace.size() == 100);
  for (std::size_t i = 0; i < est.trace.size(); ++i) {
    const auto& r = est.trace[i];
    CHECK(r.slot == i);
    CHECK(r.h >= 0.0);
    CHECK(r.spend >= 0.0);
    CHECK(r.spend <= r.battery_tx + 1e-12);
    CHECK(r.battery_tx >= 0.0);
    CHECK(r.battery_tx <= cfg.b_max + 1e-12);
    CHECK(std::isnan(r.battery_rx));  // single-sided run
    const double expect =
        r.spend > 0.0 ? 0.5 * std::log2(1.0 + r.h * r.spend) : 0.0;
    CHECK(r.rate == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("warmup resolution") {
  sim::SimConfig cfg;
  cfg.n_slots = 1000;
  CHECK(sim::resolved_warmup(cfg) == 10);
  cfg.warmup_slots = 7;
  CHECK(sim::resolved_warmup(cfg) == 7);
  CHECK(sim::resolved_prefactor(cfg) == sim::Prefactor::half);
  cfg.mode = sim::Mode::tx_rx;
  cfg.rx_policy = sim::RxPolicyKind::ctp;
  CHECK(sim::resolved_prefactor(cfg) == sim::Prefactor::one);
  cfg.prefactor = sim::Prefactor::half;
  CHECK(sim::resolved_prefactor(cfg) == sim::Prefactor::half);
}
