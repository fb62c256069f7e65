#pragma once

namespace dpl {

// Standard normal CDF evaluated as 0.5 * erfc(-x / sqrt(2)). The libm erfc
// is accurate to a few ulp, which keeps the absolute error below 1e-15 and
// avoids cancellation in the lower tail.
double normal_cdf(double x);

double normal_pdf(double x);

// Inverse of normal_cdf for p in (0, 1). Rational initial guess (Acklam)
// refined by two Halley steps against normal_cdf.
double normal_quantile(double p);

}  // namespace dpl
