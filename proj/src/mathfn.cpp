#include "noisecodec/mathfn.hpp"

namespace nc::math {

namespace {

double polevl(double x, const double* c, int n) {
  double r = c[0];
  for (int i = 1; i <= n; ++i) r = r * x + c[i];
  return r;
}

double p1evl(double x, const double* c, int n) {
  // leading coefficient 1
  double r = x + c[0];
  for (int i = 1; i < n; ++i) r = r * x + c[i];
  return r;
}

const double kErfT[] = {
    9.60497373987051638749e0, 9.00260197203842689217e1,
    2.23200534594684319226e3, 7.00332514112805075473e3,
    5.55923013010394962768e4};
const double kErfU[] = {
    3.35617141647503099647e1, 5.21357949780152679795e2,
    4.59432382970980127987e3, 2.26290000613890934246e4,
    4.92673942608635921086e4};

const double kErfcP[] = {
    2.46196981473530512524e-10, 5.64189564831068821977e-1,
    7.46321056442269912687e0,   4.86371970985681366614e1,
    1.96520832956077098242e2,   5.26445194995477358631e2,
    9.34528527171957607540e2,   1.02755188689515710272e3,
    5.57535335369399327526e2};
const double kErfcQ[] = {
    1.32281951154744992508e1, 8.67072140885989742329e1,
    3.54937778887819891062e2, 9.75708501743205489753e2,
    1.82390916687909736289e3, 2.24633760818710981792e3,
    1.65666309194161350182e3, 5.57535340817727675546e2};
// erfc(x) ~ exp(-x^2)/(x*sqrt(pi)) * sum_n (-1)^n (2n-1)!!/(2x^2)^n. For
// x >= 8 the terms shrink past 1e-16 well before the series turns.
double erfc_tail(double x, double expz) {
  const double inv2x2 = 1.0 / (2.0 * x * x);
  double term = 1.0, sum = 1.0;
  for (int n = 1; n <= 24; ++n) {
    term *= -(2 * n - 1) * inv2x2;
    sum += term;
    if (std::abs(term) < 1e-18 * sum) break;
  }
  return expz * sum / (x * 1.7724538509055160273);
}

}  // namespace

double erf_approx(double x) {
  if (std::abs(x) > 1.0) return 1.0 - erfc_approx(x);
  double z = x * x;
  return x * polevl(z, kErfT, 4) / p1evl(z, kErfU, 5);
}

double erfc_approx(double a) {
  double x = std::abs(a);
  if (x < 1.0) return 1.0 - erf_approx(a);

  double z = -a * a;
  if (z < -708.0) return a < 0 ? 2.0 : 0.0;
  z = std::exp(z);

  double y;
  if (x < 8.0) {
    y = z * polevl(x, kErfcP, 8) / p1evl(x, kErfcQ, 8);
  } else {
    y = erfc_tail(x, z);
  }
  if (a < 0) y = 2.0 - y;
  if (y == 0.0) return a < 0 ? 2.0 : 0.0;
  return y;
}

}  // namespace nc::math
