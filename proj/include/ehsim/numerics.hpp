#pragma once

#include <functional>

namespace ehsim::numerics {

inline constexpr double kLn2 = 0.6931471805599453094172321214581766;
inline constexpr double kEulerGamma = 0.5772156649015328606065120900824024;

// E[ln h] for a unit-mean exponential fading gain h, in nats.
inline constexpr double kExpLogGainNats = -kEulerGamma;

struct Tolerance {
  double rel = 1e-10;
  double abs = 1e-12;
  int max_iter = 1000000;

  void validate() const;  // throws ConfigError on nonsense values
};

enum class LogBase { nats, bits };

// Exponential integral E1(x) = \int_x^inf e^{-t}/t dt for x > 0.
// Series below x = 1, modified-Lentz continued fraction above.
double exp_integral_e1(double x);

// e^x * E1(x), computed without the underflow of the two factors.
double exp_scaled_e1(double x);

// \int_0^inf log(1 + a h) e^{-h} dh for a >= 0.
// Equals e^{1/a} E1(1/a) in nats; zero at a = 0.
double fading_log_moment(double a, LogBase base = LogBase::nats);

struct SeriesSum {
  double value = 0.0;
  double tail_bound = 0.0;  // certified bound on the dropped tail
  int terms = 0;            // number of terms accumulated
};

// Sum_{j>=0} term(j) for nonnegative terms whose tail is geometrically
// dominated with the given ratio in (0,1). Stops once the certificate
// term(j) * ratio / (1 - ratio) <= tol.abs holds on two consecutive terms
// (a single small term is not proof of decay: leading terms may be zero).
SeriesSum geometric_series_sum_detailed(const std::function<double(int)>& term,
                                        double ratio,
                                        const Tolerance& tol = {});
double geometric_series_sum(const std::function<double(int)>& term,
                            double ratio, const Tolerance& tol = {});

// Bisection root of f on [lo, hi]; requires a sign change. Terminates when
// |f(mid)| <= tol.abs, the bracket is narrower than tol.abs, or the bracket
// has collapsed to adjacent doubles.
double bisect_root(const std::function<double(double)>& f, double lo,
                   double hi, const Tolerance& tol = {});

}  // namespace ehsim::numerics
