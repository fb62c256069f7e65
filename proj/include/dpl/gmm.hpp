#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace dpl {

struct GmmComponent {
  double weight;
  double mean;      // meters
  double variance;  // m^2
};

struct GmmDistribution {
  std::vector<GmmComponent> components;
};

struct ProtectionLevelQuery {
  double integrity_risk = 0.01;
  double tolerance = 1e-4;  // meters
  int max_iterations = 200;

  void validate() const;
};

struct ProtectionLevels {
  double lateral = 0.0;
  double longitudinal = 0.0;
  double vertical = 0.0;

  double operator[](int dim) const { return dim == 0 ? lateral : dim == 1 ? longitudinal : vertical; }
};

inline constexpr double kWeightSumTolerance = 1e-12;

// One component per sample, input order preserved. Throws LengthMismatch,
// WeightSumViolation, or InvalidArgument for non-positive variances.
GmmDistribution build_gmm(std::span<const double> errors, std::span<const double> variances,
                          std::span<const double> weights);

double gmm_cdf(const GmmDistribution& g, double x);

// Signed quantile: the rho with CDF(rho) = p, found by bisection on an
// expanding bracket. Throws BracketingFailure / NonConvergence.
double gmm_quantile(const GmmDistribution& g, double p, const ProtectionLevelQuery& q);

// max(|rho_hi|, |rho_lo|) with CDF(rho_hi) = 1 - IR/2 and CDF(rho_lo) = IR/2.
double protection_level(const GmmDistribution& g, const ProtectionLevelQuery& q);

// Per-dimension inputs for protection_levels_all.
struct DimensionSamples {
  std::vector<double> errors;
  std::vector<double> variances;
  std::vector<double> weights;
};

// x -> lateral, y -> longitudinal, z -> vertical.
ProtectionLevels protection_levels_all(const std::array<DimensionSamples, 3>& dims,
                                       const ProtectionLevelQuery& q);

}  // namespace dpl
