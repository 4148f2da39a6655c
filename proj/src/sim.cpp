#include "ehsim/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <utility>

#include "ehsim/errors.hpp"
#include "ehsim/numerics.hpp"

namespace ehsim::sim {

namespace {

constexpr double kInvLn2 = 1.0 / numerics::kLn2;

struct RepAccum {
  double sum_rate = 0.0;
  std::uint64_t n_measured = 0;

  double sum_spend = 0.0;
  double sum_spend2 = 0.0;
  double sum_lag1 = 0.0;
  std::uint64_t n_lag1 = 0;

  std::uint64_t epoch_count = 0;
  std::uint64_t first_epoch = 0;
  std::uint64_t last_epoch = 0;
  bool any_epoch = false;

  std::uint64_t joint_on = 0;
  std::uint64_t h_above = 0;
  bool rx_mode = false;
  bool ctp_mode = false;
};

struct RepInstruments {
  std::vector<SlotRecord>* trace = nullptr;
  std::uint64_t trace_slots = 0;
  std::vector<double>* spend_trace = nullptr;
};

void note_measured(RepAccum& acc, std::uint64_t t, double rate, double spend,
                   bool epoch, double& prev_spend, bool& have_prev) {
  acc.sum_rate += rate;
  ++acc.n_measured;
  acc.sum_spend += spend;
  acc.sum_spend2 += spend * spend;
  if (have_prev) {
    acc.sum_lag1 += prev_spend * spend;
    ++acc.n_lag1;
  }
  prev_spend = spend;
  have_prev = true;
  if (epoch) {
    if (!acc.any_epoch) {
      acc.first_epoch = t;
      acc.any_epoch = true;
    }
    acc.last_epoch = t;
    ++acc.epoch_count;
  }
}

// Transmit-side drivers share this shape: decide a spend from the observed
// battery, turn the raw arrival into (banked harvest, epoch flag), advance.
struct CfpDriver {
  policies::CfpPolicy pol;
  double decide(const model::Battery& b) const { return pol.decide(b); }
  std::pair<double, bool> absorb(double x) const { return {x, x > 0.0}; }
  void after_slot(bool epoch) { pol.on_slot(epoch); }
};

struct QuantizedDriver {
  policies::QuantizedCfp q;
  double decide(const model::Battery& b) const { return q.policy.decide(b); }
  std::pair<double, bool> absorb(double x) const {
    const bool epoch = q.counts_as_arrival(x);
    return {epoch ? q.delta : 0.0, epoch};
  }
  void after_slot(bool epoch) { q.policy.on_slot(epoch); }
};

struct GreedyDriver {
  double decide(const model::Battery& b) const { return b.level(); }
  std::pair<double, bool> absorb(double x) const { return {x, x > 0.0}; }
  void after_slot(bool) {}
};

template <class Driver>
RepAccum run_tx_only_rep(const SimConfig& cfg, std::uint64_t rep, Driver drv,
                         double pref, const RepInstruments& ins) {
  model::RngStream ch(cfg.seed, model::Stream::channel, rep);
  model::RngStream ar(cfg.seed, model::Stream::tx_arrivals, rep);
  model::Battery bat(0.0, cfg.b_max);
  const std::uint64_t warmup = resolved_warmup(cfg);
  RepAccum acc;
  double prev_spend = 0.0;
  bool have_prev = false;
  for (std::uint64_t t = 0; t < cfg.n_slots; ++t) {
    const double h = ch.exponential();
    const double spend = drv.decide(bat);
    const double x = cfg.arrivals.sample(ar);
    const auto [harvest, epoch] = drv.absorb(x);
    const double rate = spend > 0.0 ? pref * std::log1p(h * spend) * kInvLn2 : 0.0;
    if (t >= warmup) {
      note_measured(acc, t, rate, spend, epoch, prev_spend, have_prev);
      if (ins.spend_trace) ins.spend_trace->push_back(spend);
    }
    if (ins.trace && t < ins.trace_slots) {
      ins.trace->push_back({t, h, spend, bat.level(),
                            std::numeric_limits<double>::quiet_NaN(), rate});
    }
    bat.step(spend, harvest);
    drv.after_slot(epoch);
  }
  return acc;
}

RepAccum run_tx_rx_ctp_rep(const SimConfig& cfg, std::uint64_t rep, double pref,
                           const RepInstruments& ins) {
  model::RngStream ch(cfg.seed, model::Stream::channel, rep);
  model::RngStream ar_tx(cfg.seed, model::Stream::tx_arrivals, rep);
  model::RngStream ar_rx(cfg.seed, model::Stream::rx_arrivals, rep);
  model::RngStream coin(cfg.seed, model::Stream::policy_coin, rep);
  model::Battery bt(0.0, 1.0);
  model::Battery br(0.0, 1.0);
  const double gamma_star = -std::log(std::min(cfg.p, cfg.q));
  policies::CtpTransmitter ctp(cfg.ctp_coin.value_or(cfg.q), gamma_star,
                               cfg.ctp_gate);
  if (cfg.force_gate_open) ctp.force_gate_open();
  const std::uint64_t warmup = resolved_warmup(cfg);
  RepAccum acc;
  acc.rx_mode = true;
  acc.ctp_mode = true;
  double prev_spend = 0.0;
  bool have_prev = false;
  for (std::uint64_t t = 0; t < cfg.n_slots; ++t) {
    const double h = ch.exponential();
    const double spend = ctp.decide(bt, h, coin);
    const bool rx_on = policies::threshold_receiver_decide(br, h, gamma_star);
    const bool joint = rx_on && spend > 0.0;
    const double rate = joint ? pref * std::log1p(h * spend) * kInvLn2 : 0.0;
    const bool epoch_tx = ar_tx.coin(cfg.p);
    const bool epoch_rx = ar_rx.coin(cfg.q);
    if (t >= warmup) {
      note_measured(acc, t, rate, spend, epoch_tx, prev_spend, have_prev);
      acc.joint_on += joint ? 1 : 0;
      acc.h_above += h > gamma_star ? 1 : 0;
    }
    if (ins.trace && t < ins.trace_slots) {
      ins.trace->push_back({t, h, spend, bt.level(), br.level(), rate});
    }
    bt.step(spend, epoch_tx ? 1.0 : 0.0);
    br.step(rx_on ? 1.0 : 0.0, epoch_rx ? 1.0 : 0.0);
  }
  return acc;
}

template <class Driver>
RepAccum run_tx_rx_simple_rep(const SimConfig& cfg, std::uint64_t rep, Driver drv,
                              double pref, const RepInstruments& ins) {
  model::RngStream ch(cfg.seed, model::Stream::channel, rep);
  model::RngStream ar_tx(cfg.seed, model::Stream::tx_arrivals, rep);
  model::RngStream ar_rx(cfg.seed, model::Stream::rx_arrivals, rep);
  model::Battery bt(0.0, cfg.b_max);
  model::Battery br(0.0, cfg.rx_b_max);
  const std::uint64_t warmup = resolved_warmup(cfg);
  RepAccum acc;
  acc.rx_mode = true;
  double prev_spend = 0.0;
  bool have_prev = false;
  for (std::uint64_t t = 0; t < cfg.n_slots; ++t) {
    const double h = ch.exponential();
    const double spend = drv.decide(bt);
    const bool rx_on = br.level() >= cfg.rx_on_cost;
    const bool joint = rx_on && spend > 0.0;
    const double rate = joint ? pref * std::log1p(h * spend) * kInvLn2 : 0.0;
    const double x = cfg.arrivals.sample(ar_tx);
    const auto [harvest, epoch] = drv.absorb(x);
    const bool arrival_rx = ar_rx.coin(cfg.q);
    if (t >= warmup) {
      note_measured(acc, t, rate, spend, epoch, prev_spend, have_prev);
      acc.joint_on += joint ? 1 : 0;
    }
    if (ins.trace && t < ins.trace_slots) {
      ins.trace->push_back({t, h, spend, bt.level(), br.level(), rate});
    }
    bt.step(spend, harvest);
    br.step(rx_on ? cfg.rx_on_cost : 0.0, arrival_rx ? cfg.rx_on_cost : 0.0);
    drv.after_slot(epoch);
  }
  return acc;
}

void validate(const SimConfig& cfg) {
  if (cfg.n_slots < 1) throw ConfigError("sim: n_slots must be >= 1");
  if (cfg.n_replications < 1) throw ConfigError("sim: n_replications must be >= 1");
  const std::uint64_t warmup = resolved_warmup(cfg);
  if (warmup >= cfg.n_slots) {
    throw ConfigError("sim: warmup_slots must be smaller than n_slots");
  }
  if (cfg.mode == Mode::tx_rx && cfg.rx_policy == RxPolicyKind::ctp) {
    if (!(cfg.p >= 0.0 && cfg.p <= 1.0) || !(cfg.q >= 0.0 && cfg.q <= 1.0)) {
      throw ConfigError("sim: p and q must be in [0, 1]");
    }
  } else {
    if (!(cfg.b_max > 0.0) || !std::isfinite(cfg.b_max)) {
      throw ConfigError("sim: b_max must be positive and finite");
    }
    if (cfg.tx_policy == TxPolicyKind::cfp &&
        cfg.arrivals.kind() != model::ArrivalModel::Kind::bernoulli) {
      throw ConfigError(
          "sim: the exact-p schedule requires bernoulli arrivals; "
          "use the quantized schedule for other laws");
    }
  }
  if (cfg.mode == Mode::tx_rx && cfg.rx_policy == RxPolicyKind::simple) {
    if (!(cfg.q >= 0.0 && cfg.q <= 1.0)) throw ConfigError("sim: q must be in [0, 1]");
    if (!(cfg.rx_on_cost > 0.0)) throw ConfigError("sim: rx_on_cost must be positive");
    if (!(cfg.rx_b_max >= cfg.rx_on_cost)) {
      throw ConfigError("sim: rx_b_max must be at least rx_on_cost");
    }
  }
}

RepAccum run_one_rep(const SimConfig& cfg, std::uint64_t rep, double pref,
                     const RepInstruments& ins) {
  if (cfg.mode == Mode::tx_only) {
    switch (cfg.tx_policy) {
      case TxPolicyKind::cfp: {
        const double p = cfg.arrivals.bernoulli_p();
        if (!(p > 0.0 && p < 1.0)) {
          throw ConfigError("sim: the exact-p schedule requires p in (0, 1)");
        }
        const double b_eff =
            policies::cfp_effective_b_max(cfg.arrivals.bernoulli_energy(), cfg.b_max);
        return run_tx_only_rep(cfg, rep, CfpDriver{policies::CfpPolicy(p, b_eff)},
                               pref, ins);
      }
      case TxPolicyKind::cfp_quantized:
        return run_tx_only_rep(
            cfg, rep, QuantizedDriver{policies::cfp_general_wrap(cfg.arrivals, cfg.b_max)},
            pref, ins);
      case TxPolicyKind::greedy:
        return run_tx_only_rep(cfg, rep, GreedyDriver{}, pref, ins);
    }
    throw ConfigError("sim: unknown transmit policy");
  }
  if (cfg.rx_policy == RxPolicyKind::ctp) {
    return run_tx_rx_ctp_rep(cfg, rep, pref, ins);
  }
  switch (cfg.tx_policy) {
    case TxPolicyKind::cfp: {
      const double p = cfg.arrivals.bernoulli_p();
      if (!(p > 0.0 && p < 1.0)) {
        throw ConfigError("sim: the exact-p schedule requires p in (0, 1)");
      }
      const double b_eff =
          policies::cfp_effective_b_max(cfg.arrivals.bernoulli_energy(), cfg.b_max);
      return run_tx_rx_simple_rep(cfg, rep, CfpDriver{policies::CfpPolicy(p, b_eff)},
                                  pref, ins);
    }
    case TxPolicyKind::cfp_quantized:
      return run_tx_rx_simple_rep(
          cfg, rep, QuantizedDriver{policies::cfp_general_wrap(cfg.arrivals, cfg.b_max)},
          pref, ins);
    case TxPolicyKind::greedy:
      return run_tx_rx_simple_rep(cfg, rep, GreedyDriver{}, pref, ins);
  }
  throw ConfigError("sim: unknown transmit policy");
}

}  // namespace

std::uint64_t resolved_warmup(const SimConfig& cfg) {
  return cfg.warmup_slots == kAutoWarmup ? cfg.n_slots / 100 : cfg.warmup_slots;
}

Prefactor resolved_prefactor(const SimConfig& cfg) {
  if (cfg.prefactor) return *cfg.prefactor;
  if (cfg.mode == Mode::tx_rx && cfg.rx_policy == RxPolicyKind::ctp) {
    return Prefactor::one;
  }
  return Prefactor::half;
}

ThroughputEstimate run(const SimConfig& cfg) {
  validate(cfg);
  const double pref = resolved_prefactor(cfg) == Prefactor::half ? 0.5 : 1.0;
  const std::uint32_t reps = cfg.n_replications;

  ThroughputEstimate est;
  RepInstruments rep0;
  rep0.trace_slots = std::min(cfg.trace_slots, cfg.n_slots);
  if (rep0.trace_slots > 0) {
    est.trace.reserve(rep0.trace_slots);
    rep0.trace = &est.trace;
  }
  if (cfg.collect_spend_trace) {
    est.spend_trace.reserve(cfg.n_slots - resolved_warmup(cfg));
    rep0.spend_trace = &est.spend_trace;
  }

  std::vector<RepAccum> accs(reps);
  accs[0] = run_one_rep(cfg, 0, pref, rep0);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers =
      std::min<unsigned>(reps > 1 ? reps - 1 : 0, cfg.threads ? cfg.threads : hw);
  if (workers > 1) {
    std::atomic<std::uint32_t> next{1};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::uint32_t r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) {
          accs[r] = run_one_rep(cfg, r, pref, RepInstruments{});
        }
      });
    }
    for (auto& th : pool) th.join();
  } else {
    for (std::uint32_t r = 1; r < reps; ++r) {
      accs[r] = run_one_rep(cfg, r, pref, RepInstruments{});
    }
  }

  // Replication means reduced in index order, so results do not depend on
  // the number of worker threads.
  double mean = 0.0;
  for (const auto& a : accs) {
    mean += a.sum_rate / static_cast<double>(a.n_measured);
  }
  mean /= reps;
  double ss = 0.0;
  for (const auto& a : accs) {
    const double d = a.sum_rate / static_cast<double>(a.n_measured) - mean;
    ss += d * d;
  }
  est.mean = mean;
  est.std_err = reps > 1 ? std::sqrt(ss / (static_cast<double>(reps) * (reps - 1))) : 0.0;

  EstimateExtras& ex = est.extras;
  std::uint64_t n_meas = 0, n_lag = 0, gap_slots = 0, gap_count = 0, joint = 0, habove = 0;
  double s_spend = 0.0, s_spend2 = 0.0, s_lag = 0.0;
  for (const auto& a : accs) {
    n_meas += a.n_measured;
    ex.epoch_count += a.epoch_count;
    s_spend += a.sum_spend;
    s_spend2 += a.sum_spend2;
    s_lag += a.sum_lag1;
    n_lag += a.n_lag1;
    if (a.epoch_count >= 2) {
      gap_slots += a.last_epoch - a.first_epoch;
      gap_count += a.epoch_count - 1;
    }
    joint += a.joint_on;
    habove += a.h_above;
  }
  est.n_effective = n_meas;
  ex.slots_simulated = static_cast<std::uint64_t>(cfg.n_slots) * reps;
  ex.spend_second_moment = s_spend2 / static_cast<double>(n_meas);
  if (gap_count > 0) {
    ex.mean_inter_epoch_time =
        static_cast<double>(gap_slots) / static_cast<double>(gap_count);
  }
  if (n_lag > 0) {
    ex.fkg_lhs = s_lag / static_cast<double>(n_lag);
    const double mean_spend = s_spend / static_cast<double>(n_meas);
    ex.fkg_rhs = mean_spend * mean_spend;
  }
  if (accs[0].rx_mode) {
    ex.joint_on_fraction = static_cast<double>(joint) / static_cast<double>(n_meas);
  }
  if (accs[0].ctp_mode) {
    ex.h_above_gamma_fraction =
        static_cast<double>(habove) / static_cast<double>(n_meas);
  }
  return est;
}

FkgTerms estimate_fkg_terms(const std::vector<double>& spends, std::size_t lag) {
  if (lag < 1) throw std::invalid_argument("fkg: lag must be >= 1");
  if (spends.size() < 10 * lag) {
    throw std::invalid_argument("fkg: need at least 10*lag spend samples");
  }
  const std::size_t n = spends.size();
  const std::size_t m = n - lag;
  double s_prod = 0.0, s_prod2 = 0.0, s_all = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double pr = spends[i] * spends[i + lag];
    s_prod += pr;
    s_prod2 += pr * pr;
  }
  for (const double s : spends) s_all += s;
  FkgTerms out;
  out.lhs = s_prod / static_cast<double>(m);
  const double mean_all = s_all / static_cast<double>(n);
  out.rhs = mean_all * mean_all;
  const double var =
      std::max(0.0, s_prod2 / static_cast<double>(m) - out.lhs * out.lhs);
  out.lhs_std_err = std::sqrt(var / static_cast<double>(m));
  return out;
}

bool empirical_second_moment_within_bound(const std::vector<double>& spends,
                                          const model::ArrivalModel& arrivals) {
  if (spends.empty()) return true;
  const std::size_t n = spends.size();
  double s2 = 0.0, s4 = 0.0;
  for (const double s : spends) {
    const double sq = s * s;
    s2 += sq;
    s4 += sq * sq;
  }
  const double m2 = s2 / static_cast<double>(n);
  const double var = std::max(0.0, s4 / static_cast<double>(n) - m2 * m2);
  const double se = std::sqrt(var / static_cast<double>(n));
  return m2 <= arrivals.second_moment() + 3.0 * se + 1e-12;
}

}  // namespace ehsim::sim
