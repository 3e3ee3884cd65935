#pragma once

#include <cstddef>

namespace fadi {

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

double chi2_cdf(std::size_t df, double x);

// Inverse of chi2_cdf by bracketing and bisection; absolute error below 1e-10.
double chi2_quantile(std::size_t df, double prob);

}  // namespace fadi
