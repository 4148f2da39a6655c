#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ehsim::verify {

// Independent quadrature used to cross-check the numerics core. Kept free of
// the series/continued-fraction code paths it validates.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double rel_tol = 1e-12);

// E1 via finite-interval transforms of the defining integral.
double oracle_exp_integral_e1(double x);

// \int_gamma^inf ln(1+h) e^{-h} dh, nats, by direct quadrature.
double oracle_log_tail_integral(double gamma);

struct Criterion {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct Report {
  std::vector<Criterion> criteria;
  bool all_pass = false;
  std::uint64_t total_slots = 0;  // slots simulated across the whole suite
  std::uint64_t seed = 0;
};

struct Options {
  std::uint64_t seed = 424243;
  std::uint64_t slots = 1'000'000;  // per simulation run
  std::uint32_t reps = 20;
};

// Runs the full acceptance suite. Shrinking slots/reps below the defaults
// will honestly fail the total-slot-count criterion.
Report run_acceptance(const Options& opt = {});

// One line per criterion, e.g. "[ 4] PASS  simulator matches ..." .
std::string format_criterion_line(const Criterion& c);

}  // namespace ehsim::verify
