#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace ehsim_test {

void gauss_laguerre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int max_newton = 100;
  double z = 0.0;
  for (int i = 1; i <= n; ++i) {
    // Stroud-Secrest style initial guesses, refined by Newton steps on the
    // recurrence-evaluated Laguerre polynomial.
    if (i == 1) {
      z = 3.0 / (1.0 + 2.4 * n);
    } else if (i == 2) {
      z += 15.0 / (1.0 + 2.5 * n);
    } else {
      const double ai = i - 2;
      z += ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - x[i - 3]);
    }
    double pp = 0.0, p2 = 0.0;
    bool converged = false;
    for (int it = 0; it < max_newton; ++it) {
      double p1 = 1.0;
      p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0 - z) * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (p1 - p2) / z;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::fabs(z - z1) <= 1e-14 * std::max(1.0, std::fabs(z))) {
        converged = true;
        break;
      }
    }
    if (!converged) throw std::runtime_error("gauss_laguerre: Newton stalled");
    x[i - 1] = z;
    w[i - 1] = -1.0 / (pp * n * p2);
  }
}

double oracle_fading_log_moment_nats(double a) {
  static std::vector<double> x, w;
  if (x.empty()) gauss_laguerre(64, x, w);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::log1p(a * x[i]);
  return s;
}

double oracle_cfp_lb_bits(double p, double b_max, int terms) {
  const double ln2 = 0.6931471805599453;
  double s = 0.0;
  for (int j = 0; j < terms; ++j) {
    const double wj = p * std::pow(1.0 - p, j);
    s += wj * 0.5 * oracle_fading_log_moment_nats(wj * b_max) / ln2;
  }
  return s;
}

double oracle_root_scan(const std::function<double(double)>& f, double lo,
                        double hi, int points) {
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  double x_prev = lo;
  double f_prev = f(lo);
  for (int i = 1; i <= points; ++i) {
    const double x = std::exp(llo + (lhi - llo) * i / points);
    const double fx = f(x);
    if ((f_prev <= 0.0 && fx >= 0.0) || (f_prev >= 0.0 && fx <= 0.0)) {
      return x_prev - f_prev * (x - x_prev) / (fx - f_prev);
    }
    x_prev = x;
    f_prev = fx;
  }
  throw std::runtime_error("oracle_root_scan: no sign change found");
}

}  // namespace ehsim_test
