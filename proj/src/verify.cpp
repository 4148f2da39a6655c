#include "ehsim/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "ehsim/bounds.hpp"
#include "ehsim/errors.hpp"
#include "ehsim/model.hpp"
#include "ehsim/numerics.hpp"
#include "ehsim/serialize.hpp"
#include "ehsim/sim.hpp"

namespace ehsim::verify {

namespace {

double simpson_adapt(const std::function<double(double)>& f, double a, double fa,
                     double m, double fm, double b, double fb, double whole,
                     double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_adapt(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         simpson_adapt(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double rel_tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double tol = rel_tol * std::max(std::fabs(whole), 1e-30);
  return simpson_adapt(f, a, fa, m, fm, b, fb, whole, tol, 48);
}

double oracle_exp_integral_e1(double x) {
  if (!(x > 0.0)) throw std::domain_error("oracle_exp_integral_e1: x must be > 0");
  if (x >= 1.0) {
    // t = x - ln v maps (0, 1] onto [x, inf): E1(x) = e^-x \int_0^1 dv/(x - ln v).
    const auto f = [x](double v) { return v > 0.0 ? 1.0 / (x - std::log(v)) : 0.0; };
    return std::exp(-x) * adaptive_simpson(f, 0.0, 1.0, 1e-13);
  }
  // Split at 1: \int_x^1 e^{-t}/t dt (s = ln t) plus E1(1).
  const auto g = [](double s) { return std::exp(-std::exp(s)); };
  const double head = adaptive_simpson(g, std::log(x), 0.0, 1e-13);
  const auto f1 = [](double v) { return v > 0.0 ? 1.0 / (1.0 - std::log(v)) : 0.0; };
  const double e1_at_1 = std::exp(-1.0) * adaptive_simpson(f1, 0.0, 1.0, 1e-13);
  return head + e1_at_1;
}

double oracle_log_tail_integral(double gamma) {
  if (!(gamma >= 0.0)) throw std::domain_error("oracle_log_tail_integral: gamma must be >= 0");
  // Integrand decays like e^{-h}; 60 nats past gamma is far below any
  // tolerance in use.
  const auto f = [](double h) { return std::log1p(h) * std::exp(-h); };
  return adaptive_simpson(f, gamma, gamma + 60.0, 1e-13);
}

namespace {

using Clock = std::chrono::steady_clock;

double secs_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

struct SuiteState {
  std::uint64_t total_slots = 0;
  bool violation = false;
  std::string violation_msg;
};

sim::ThroughputEstimate counted_run(const sim::SimConfig& cfg, SuiteState& st) {
  try {
    auto est = sim::run(cfg);
    st.total_slots += est.extras.slots_simulated;
    return est;
  } catch (const NeutralityViolation& e) {
    st.violation = true;
    st.violation_msg = e.what();
    throw;
  }
}

}  // namespace

Report run_acceptance(const Options& opt) {
  Report report;
  report.seed = opt.seed;
  SuiteState st;

  auto run_criterion = [&](int id, const char* name, auto&& body) {
    Criterion c;
    c.id = id;
    c.name = name;
    const auto t0 = Clock::now();
    try {
      body(c);
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("exception: ") + e.what();
    }
    c.seconds = secs_since(t0);
    report.criteria.push_back(std::move(c));
  };

  // Artifacts shared between criteria.
  sim::SimConfig cfg4;
  sim::ThroughputEstimate est4;
  bool have_est4 = false;

  run_criterion(1, "gap-constant solver pins k(1/2) and the fixed-point gap",
                [&](Criterion& c) {
    const auto t0 = Clock::now();
    const double k = bounds::solve_gap_constant(0.5);
    const double gap = bounds::bernoulli_gap_bound(0.5);
    const double sec = secs_since(t0);
    c.pass = std::fabs(k - 6.05) <= 0.01 && std::fabs(gap - 1.41) <= 0.01 &&
             sec < 1.0;
    c.detail = "k=" + fmt(k) + " gap=" + fmt(gap) +
               " (targets 6.05+-0.01, 1.41+-0.01)";
  });

  run_criterion(2, "bernoulli ceiling-to-schedule gap <= 1.411 across battery sizes",
                [&](Criterion& c) {
    const auto t0 = Clock::now();
    double worst = 0.0, worst_b = 0.0;
    for (const double b : {1.0, 5.0, 10.0, 100.0, 1000.0}) {
      const double ub = bounds::transmitter_upper_bound(
          model::ArrivalModel::bernoulli(0.5, b));
      const double lb = bounds::cfp_lower_bound_bernoulli(0.5, b);
      if (ub - lb > worst) {
        worst = ub - lb;
        worst_b = b;
      }
    }
    const double sec = secs_since(t0);
    c.pass = worst <= 1.41 + 1e-3 && sec < 1.0;
    c.detail = "max_gap=" + fmt(worst) + " at b_max=" + fmt(worst_b) +
               " (limit 1.411)";
  });

  run_criterion(3, "uniform-arrival quantized gap <= 1.78 across battery sizes",
                [&](Criterion& c) {
    const auto t0 = Clock::now();
    double worst = 0.0, worst_b = 0.0;
    for (const double b : {1.0, 10.0, 100.0}) {
      const auto r = bounds::general_bounds_report(
          model::ArrivalModel::uniform(0.0, b), b);
      if (r.t_ub - r.t_lb > worst) {
        worst = r.t_ub - r.t_lb;
        worst_b = b;
      }
    }
    const double sec = secs_since(t0);
    c.pass = worst <= 1.78 && sec < 1.0;
    c.detail = "max_gap=" + fmt(worst) + " at b_max=" + fmt(worst_b) +
               " (limit 1.78)";
  });

  run_criterion(4, "simulated schedule rate matches analytic within 3 std errs",
                [&](Criterion& c) {
    const auto t0 = Clock::now();
    cfg4.mode = sim::Mode::tx_only;
    cfg4.tx_policy = sim::TxPolicyKind::cfp;
    cfg4.arrivals = model::ArrivalModel::bernoulli(0.5, 10.0);
    cfg4.b_max = 10.0;
    cfg4.n_slots = opt.slots;
    cfg4.n_replications = opt.reps;
    cfg4.seed = opt.seed;
    cfg4.collect_spend_trace = true;
    est4 = counted_run(cfg4, st);
    have_est4 = true;
    const double analytic = bounds::cfp_lower_bound_bernoulli(0.5, 10.0);
    const double dev = std::fabs(est4.mean - analytic);
    const double sec = secs_since(t0);
    c.pass = dev <= 3.0 * est4.std_err && est4.std_err <= 0.01 && sec < 30.0;
    c.detail = "sim=" + fmt(est4.mean) + " analytic=" + fmt(analytic) +
               " stderr=" + fmt(est4.std_err);
  });

  run_criterion(5, "no simulated throughput beats its ceiling (3 std errs slack)",
                [&](Criterion& c) {
    struct Case {
      model::ArrivalModel arr;
      sim::TxPolicyKind pol;
      double b;
    };
    std::vector<Case> cases;
    for (const double b : {1.0, 5.0, 100.0, 1000.0}) {
      cases.push_back({model::ArrivalModel::bernoulli(0.5, b),
                       sim::TxPolicyKind::cfp, b});
    }
    for (const double b : {1.0, 10.0, 100.0}) {
      cases.push_back({model::ArrivalModel::uniform(0.0, b),
                       sim::TxPolicyKind::cfp_quantized, b});
    }
    double min_margin = std::numeric_limits<double>::infinity();
    std::string worst;
    const auto consider = [&](const model::ArrivalModel& arr,
                              const sim::ThroughputEstimate& est) {
      const double ub = bounds::transmitter_upper_bound(arr);
      const double margin = ub + 3.0 * est.std_err - est.mean;
      if (margin < min_margin) {
        min_margin = margin;
        worst = arr.describe();
      }
    };
    for (const auto& k : cases) {
      sim::SimConfig cfg;
      cfg.mode = sim::Mode::tx_only;
      cfg.tx_policy = k.pol;
      cfg.arrivals = k.arr;
      cfg.b_max = k.b;
      cfg.n_slots = opt.slots;
      cfg.n_replications = opt.reps;
      cfg.seed = opt.seed;
      consider(k.arr, counted_run(cfg, st));
    }
    if (have_est4) consider(cfg4.arrivals, est4);
    c.pass = min_margin >= 0.0;
    c.detail = "min_margin=" + fmt(min_margin) + " at " + worst;
  });

  run_criterion(7, "common-threshold schedule achieves half its ceiling",
                [&](Criterion& c) {
    const auto t0 = Clock::now();
    sim::SimConfig cfg;
    cfg.mode = sim::Mode::tx_rx;
    cfg.rx_policy = sim::RxPolicyKind::ctp;
    cfg.p = 0.5;
    cfg.q = 0.5;
    cfg.n_slots = opt.slots;
    cfg.n_replications = opt.reps;
    cfg.seed = opt.seed;
    const auto est = counted_run(cfg, st);
    const auto ub = bounds::unit_battery_rx_upper_bound(0.5, 0.5);
    const double floor = bounds::ctp_lower_bound_guarantee(ub.t_ub);
    const double m = std::min(cfg.p, cfg.q);
    const double sigma =
        std::sqrt(m * (1.0 - m) / static_cast<double>(est.n_effective));
    const double h_frac = est.extras.h_above_gamma_fraction;
    const double sec = secs_since(t0);
    c.pass = est.mean >= floor - 3.0 * est.std_err &&
             std::fabs(h_frac - m) <= 3.0 * sigma && sec < 30.0;
    c.detail = "sim=" + fmt(est.mean) + " floor=" + fmt(floor) +
               " ceiling=" + fmt(ub.t_ub) + " h_frac=" + fmt(h_frac);
  });

  run_criterion(8, "positive spend autocorrelation at lags 1 and 5",
                [&](Criterion& c) {
    if (!have_est4 || est4.spend_trace.empty()) {
      c.pass = false;
      c.detail = "no spend trace available (criterion 4 failed earlier)";
      return;
    }
    bool ok = true;
    std::string parts;
    for (const std::size_t lag : {std::size_t{1}, std::size_t{5}}) {
      const auto terms = sim::estimate_fkg_terms(est4.spend_trace, lag);
      ok = ok && terms.lhs >= terms.rhs - 3.0 * terms.lhs_std_err;
      if (!parts.empty()) parts += "; ";
      parts += "lag" + std::to_string(lag) + ": lhs=" + fmt(terms.lhs) +
               " rhs=" + fmt(terms.rhs);
    }
    c.pass = ok;
    c.detail = parts;
  });

  run_criterion(9, "exponential-integral core agrees with independent quadrature",
                [&](Criterion& c) {
    const double lo = std::log(1e-4);
    const double hi = std::log(50.0);
    double max_rel = 0.0, worst_x = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double x = std::exp(lo + (hi - lo) * i / 49.0);
      const double impl = numerics::exp_integral_e1(x);
      const double ref = oracle_exp_integral_e1(x);
      const double rel = std::fabs(impl - ref) / std::fabs(ref);
      if (rel > max_rel) {
        max_rel = rel;
        worst_x = x;
      }
    }
    const double flm = numerics::fading_log_moment(1.0, numerics::LogBase::nats);
    const bool flm_ok = std::fabs(flm - 0.596347) <= 1e-6;
    c.pass = max_rel < 1e-8 && flm_ok;
    c.detail = "max_rel=" + fmt(max_rel) + " at x=" + fmt(worst_x) +
               ", log-moment(1)=" + fmt(flm);
  });

  run_criterion(10, "identical flags reproduce byte-identical estimate JSON",
                [&](Criterion& c) {
    if (!have_est4) {
      c.pass = false;
      c.detail = "no baseline run available (criterion 4 failed earlier)";
      return;
    }
    const std::string first = serialize::estimate_json(cfg4, est4);
    const auto rerun = counted_run(cfg4, st);
    const std::string second = serialize::estimate_json(cfg4, rerun);
    c.pass = first == second;
    c.detail = "bytes=" + std::to_string(first.size()) +
               (c.pass ? " identical" : " MISMATCH");
  });

  // Evaluated last: aggregates every simulation the suite ran.
  run_criterion(6, "energy neutrality holds across >= 1e8 simulated slots",
                [&](Criterion& c) {
    c.pass = !st.violation && st.total_slots >= 100'000'000ULL;
    c.detail = "slots=" + std::to_string(st.total_slots) +
               (st.violation ? std::string(", violation: ") + st.violation_msg
                             : std::string(", no violations"));
  });

  std::sort(report.criteria.begin(), report.criteria.end(),
            [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
  report.total_slots = st.total_slots;
  report.all_pass = std::all_of(report.criteria.begin(), report.criteria.end(),
                                [](const Criterion& c) { return c.pass; });
  return report;
}

std::string format_criterion_line(const Criterion& c) {
  std::ostringstream os;
  os << '[' << std::setw(2) << c.id << "] " << (c.pass ? "PASS" : "FAIL") << "  "
     << c.name;
  if (!c.detail.empty()) os << "  (" << c.detail << ")";
  os << " [" << std::fixed << std::setprecision(2) << c.seconds << "s]";
  return os.str();
}

}  // namespace ehsim::verify
