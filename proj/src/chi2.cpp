#include "fadi/chi2.hpp"

#include <cmath>
#include <limits>

#include "fadi/common.hpp"

namespace fadi {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 1000;

double series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper tail Q(a, x) by the modified Lentz continued fraction.
double continued_fraction(double a, double x) {
  const double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  require(a > 0.0, "gamma_p: shape must be positive");
  require(!std::isnan(x), "gamma_p: NaN argument");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return series(a, x);
  return 1.0 - continued_fraction(a, x);
}

double chi2_cdf(std::size_t df, double x) {
  require(df >= 1, "chi2_cdf: df must be at least 1");
  return gamma_p(0.5 * static_cast<double>(df), 0.5 * x);
}

double chi2_quantile(std::size_t df, double prob) {
  require(df >= 1, "chi2_quantile: df must be at least 1");
  if (!(prob > 0.0 && prob < 1.0)) throw InvalidArgument("chi2_quantile: prob must lie in (0,1)");
  double lo = 0.0;
  double hi = static_cast<double>(df) + 10.0;
  while (chi2_cdf(df, hi) < prob) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(df, mid) < prob) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace fadi
