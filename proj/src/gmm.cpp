#include "dpl/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dpl/error.hpp"
#include "dpl/normal.hpp"

namespace dpl {

void ProtectionLevelQuery::validate() const {
  if (!(integrity_risk > 0.0 && integrity_risk < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "integrity risk must lie in (0, 1)");
  }
  if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (max_iterations <= 0) throw Error(ErrorCode::InvalidArgument, "max_iterations must be positive");
}

GmmDistribution build_gmm(std::span<const double> errors, std::span<const double> variances,
                          std::span<const double> weights) {
  if (errors.size() != variances.size() || errors.size() != weights.size()) {
    throw Error(ErrorCode::LengthMismatch, "errors, variances and weights differ in length");
  }
  if (errors.empty()) throw Error(ErrorCode::LengthMismatch, "mixture needs at least one component");
  double total = 0.0;
  GmmDistribution g;
  g.components.reserve(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw Error(ErrorCode::WeightSumViolation, "negative weight");
    if (!(variances[i] > 0.0) || !std::isfinite(variances[i])) {
      throw Error(ErrorCode::InvalidArgument, "component variance must be positive");
    }
    if (!std::isfinite(errors[i])) throw Error(ErrorCode::InvalidArgument, "component mean must be finite");
    total += weights[i];
    g.components.push_back({weights[i], errors[i], variances[i]});
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    throw Error(ErrorCode::WeightSumViolation, "weights sum to " + std::to_string(total));
  }
  return g;
}

double gmm_cdf(const GmmDistribution& g, double x) {
  double sum = 0.0;
  for (const auto& c : g.components) sum += c.weight * normal_cdf((x - c.mean) / std::sqrt(c.variance));
  return sum;
}

double gmm_quantile(const GmmDistribution& g, double p, const ProtectionLevelQuery& q) {
  q.validate();
  if (g.components.empty()) throw Error(ErrorCode::InvalidArgument, "empty mixture");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile level must lie in (0, 1)");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& c : g.components) {
    const double sd = std::sqrt(c.variance);
    lo = std::min(lo, c.mean - 10.0 * sd);
    hi = std::max(hi, c.mean + 10.0 * sd);
  }

  // Bracket invariant: CDF(lo) < p <= CDF(hi).
  constexpr int kMaxExpansions = 5;
  int expansions = 0;
  while (!(gmm_cdf(g, lo) < p && gmm_cdf(g, hi) >= p)) {
    if (expansions++ == kMaxExpansions) {
      throw Error(ErrorCode::BracketingFailure, "cannot bracket quantile p = " + std::to_string(p));
    }
    const double width = hi - lo;
    if (gmm_cdf(g, lo) >= p) lo -= width;
    if (gmm_cdf(g, hi) < p) hi += width;
  }

  for (int it = 0; it < q.max_iterations; ++it) {
    if (hi - lo <= q.tolerance) return 0.5 * (lo + hi);
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) return mid;  // bracket at floating-point resolution
    if (gmm_cdf(g, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (hi - lo <= q.tolerance) return 0.5 * (lo + hi);
  throw Error(ErrorCode::NonConvergence, "bisection did not reach tolerance");
}

double protection_level(const GmmDistribution& g, const ProtectionLevelQuery& q) {
  q.validate();
  const double half = 0.5 * q.integrity_risk;
  const double upper = gmm_quantile(g, 1.0 - half, q);
  const double lower = gmm_quantile(g, half, q);
  return std::max(std::abs(upper), std::abs(lower));
}

ProtectionLevels protection_levels_all(const std::array<DimensionSamples, 3>& dims,
                                       const ProtectionLevelQuery& q) {
  std::array<double, 3> pl{};
  for (int d = 0; d < 3; ++d) {
    const auto g = build_gmm(dims[d].errors, dims[d].variances, dims[d].weights);
    pl[d] = protection_level(g, q);
  }
  return {pl[0], pl[1], pl[2]};
}

}  // namespace dpl
