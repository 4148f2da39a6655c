#include "ehsim/numerics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ehsim/errors.hpp"

namespace ehsim::numerics {

void Tolerance::validate() const {
  if (!(rel >= 0.0) || !(abs >= 0.0) || rel + abs <= 0.0) {
    throw ConfigError("tolerance: rel and abs must be nonnegative, not both zero");
  }
  if (max_iter < 1) {
    throw ConfigError("tolerance: max_iter must be positive");
  }
}

namespace {

// Power series around 0: E1(x) = -gamma - ln x + sum_{n>=1} (-1)^{n+1} x^n / (n n!).
double e1_series(double x) {
  double sum = -kEulerGamma - std::log(x);
  double c = 1.0;  // x^n / n!
  for (int n = 1; n <= 64; ++n) {
    c *= x / n;
    const double t = c / n;
    sum += (n & 1) ? t : -t;
    if (t < 1e-18 * std::max(1.0, std::fabs(sum))) return sum;
  }
  throw NonConvergence("exp_integral_e1: series did not converge");
}

// Modified Lentz evaluation of the continued fraction for e^x E1(x):
//   e^x E1(x) = 1 / (x + 1 - 1^2/(x + 3 - 2^2/(x + 5 - ...)))
double e1_scaled_cf(double x) {
  const double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 256; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double del = c * d;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) return h;
  }
  throw NonConvergence("exp_integral_e1: continued fraction did not converge");
}

}  // namespace

double exp_integral_e1(double x) {
  if (!(x > 0.0)) throw std::domain_error("exp_integral_e1: x must be > 0");
  if (x <= 1.0) return e1_series(x);
  return std::exp(-x) * e1_scaled_cf(x);
}

double exp_scaled_e1(double x) {
  if (!(x > 0.0)) throw std::domain_error("exp_scaled_e1: x must be > 0");
  if (x <= 1.0) return std::exp(x) * e1_series(x);
  return e1_scaled_cf(x);
}

double fading_log_moment(double a, LogBase base) {
  if (!(a >= 0.0)) throw std::domain_error("fading_log_moment: a must be >= 0");
  if (a == 0.0) return 0.0;
  const double nats = exp_scaled_e1(1.0 / a);
  return base == LogBase::nats ? nats : nats / kLn2;
}

SeriesSum geometric_series_sum_detailed(const std::function<double(int)>& term,
                                        double ratio, const Tolerance& tol) {
  tol.validate();
  if (!(ratio > 0.0) || !(ratio < 1.0)) {
    throw ConfigError("geometric_series_sum: ratio must lie in (0, 1)");
  }
  const double tail_factor = ratio / (1.0 - ratio);
  double sum = 0.0;
  bool prev_certified = false;
  for (int j = 0; j < tol.max_iter; ++j) {
    const double t = term(j);
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw std::domain_error("geometric_series_sum: terms must be finite and >= 0");
    }
    sum += t;
    const double tail = t * tail_factor;
    const bool certified = tail <= tol.abs + tol.rel * std::fabs(sum);
    if (j >= 1 && certified && prev_certified) {
      return SeriesSum{sum, tail, j + 1};
    }
    prev_certified = certified;
  }
  throw NonConvergence("geometric_series_sum: no convergence within max_iter terms");
}

double geometric_series_sum(const std::function<double(int)>& term, double ratio,
                            const Tolerance& tol) {
  return geometric_series_sum_detailed(term, ratio, tol).value;
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   const Tolerance& tol) {
  tol.validate();
  if (!(lo < hi)) throw BracketError("bisect_root: requires lo < hi");
  double flo = f(lo);
  double fhi = f(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi)) {
    throw BracketError("bisect_root: endpoint values must be finite");
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw BracketError("bisect_root: f(lo) and f(hi) must differ in sign");
  }
  double mid = lo;
  for (int i = 0; i < tol.max_iter; ++i) {
    mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) return mid;  // bracket collapsed to 1 ulp
    const double fm = f(mid);
    if (std::fabs(fm) <= tol.abs || (hi - lo) < tol.abs + tol.rel * std::fabs(mid)) {
      return mid;
    }
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  throw NonConvergence("bisect_root: no convergence within max_iter");
}

}  // namespace ehsim::numerics
