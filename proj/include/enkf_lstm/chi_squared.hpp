#pragma once

#include <cmath>
#include <string>

#include "enkf_lstm/errors.hpp"

namespace enkf_lstm {

namespace detail {

// Regularized lower incomplete gamma P(a, x): series expansion for
// x < a + 1, Lentz continued fraction for the complement otherwise.
inline double gamma_p(double a, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  if (x < 0.0 || a <= 0.0) throw ArgumentError("gamma_p: need x >= 0 and a > 0");
  if (x == 0.0) return 0.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n <= kMaxIter; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * kEps)
        return sum * std::exp(log_prefix);
    }
    throw NumericalError("gamma_p: series did not converge");
  }
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps)
      return 1.0 - std::exp(log_prefix) * h;
  }
  throw NumericalError("gamma_p: continued fraction did not converge");
}

}  // namespace detail

inline double chi2_cdf(double x, int dof) {
  if (dof < 1) throw ArgumentError("chi2_cdf: dof must be >= 1");
  if (x <= 0.0) return 0.0;
  return detail::gamma_p(0.5 * dof, 0.5 * x);
}

// Upper-tail critical value: the c with P(chi2_dof <= c) = 1 - upper_tail,
// located by bracketed bisection on the CDF.
inline double chi2_critical(int dof, double upper_tail) {
  if (dof < 1) throw ArgumentError("chi2_critical: dof must be >= 1");
  if (!(upper_tail > 0.0) || !(upper_tail < 1.0))
    throw ArgumentError("chi2_critical: upper_tail must lie in (0, 1)");
  const double target = 1.0 - upper_tail;
  double lo = 0.0;
  double hi = double(dof);
  while (chi2_cdf(hi, dof) < target) {
    hi *= 2.0;
    if (hi > 1e12) throw NumericalError("chi2_critical: bracket expansion failed");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, dof) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace enkf_lstm
