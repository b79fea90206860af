#pragma once

#include <cmath>

namespace nc::math {

// Rational-approximation erf/erfc in double precision (Cephes-style
// coefficients), absolute error below 1e-13 on the real line. Used instead
// of the C library so coded probability tables do not depend on the host
// libm. Checked against std::erf in the tests.
double erf_approx(double x);
double erfc_approx(double x);

// Standard normal CDF via erfc: Phi(x) = erfc(-x / sqrt(2)) / 2.
inline double normal_cdf(double x) {
  return 0.5 * erfc_approx(-x * 0.7071067811865475244008443621048490392848);
}

inline double normal_pdf(double x) {
  return 0.3989422804014326779399460599343818684759 * std::exp(-0.5 * x * x);
}

inline double softplus(double x) {
  // log1p(exp(x)) without overflow.
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double softplus_inv(double y) {
  // inverse of softplus for y > 0
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

}  // namespace nc::math
