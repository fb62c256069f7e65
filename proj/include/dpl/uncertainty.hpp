#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "dpl/estimator.hpp"
#include "dpl/sampling.hpp"

namespace dpl {

// One sample of the state-estimate position error (vehicle frame).
struct ErrorSample {
  Vec3 position_error = Vec3::Zero();
  Mat3 covariance = Mat3::Identity();
  CandidateOffset source_offset;
};

// Second moments of the rows of R' - I for a random small rotation R':
// blocks[a][b] = E[r_a r_b^T], r_a the a-th row of R' - I as a column.
struct RotationUncertainty {
  std::array<std::array<Mat3, 3>, 3> blocks{};
  std::size_t sample_count = 0;

  // Entry (a, b) is v^T blocks[a][b] v = Tr(v v^T blocks[a][b]).
  Mat3 correction(const Vec3& v) const;

  static RotationUncertainty zero();
};

inline constexpr std::size_t kMinRotationSamples = 1000;

// Throws InsufficientSamples below `min_samples`.
RotationUncertainty precompute_q(std::span<const Quat> rotation_samples,
                                 std::size_t min_samples = kMinRotationSamples);

// JSON-lines rotation residuals: {"q": [w, x, y, z]} per line.
std::vector<Quat> read_rotation_residuals(std::istream& in);
std::vector<Quat> load_rotation_residuals(const std::filesystem::path& path);
void write_rotation_residuals(std::ostream& out, std::span<const Quat> residuals);

// Rotation error of the state estimate implied by a candidate's rotation
// error and its known rotation offset: R_est = R(r) * R_candidate.
Mat3 estimate_rotation(const ErrorEstimate& candidate_estimate, const CandidateOffset& offset);

// position = dx_i - R^T t, covariance = S_i + correction(R^T t), symmetrized.
// Throws CorrectionNotPSD when the result fails the Cholesky test.
ErrorSample transform_error(const ErrorEstimate& candidate_estimate, const CandidateOffset& offset,
                            const RotationUncertainty& ru);

inline constexpr double kRobustZScale = 0.6745;

struct OutlierWeights {
  std::array<std::vector<double>, 3> per_dim;

  const std::vector<double>& x() const { return per_dim[0]; }
  const std::vector<double>& y() const { return per_dim[1]; }
  const std::vector<double>& z() const { return per_dim[2]; }
  std::size_t size() const { return per_dim[0].size(); }

  static OutlierWeights uniform(std::size_t n);
};

// Robust Z-score softmax weights for one dimension:
// w_i = softmax(-gamma * |v_i - med| / MAD). All-equal deviations give
// uniform weights; MAD == 0 with unequal deviations falls back to the mean
// absolute deviation as the scale.
std::vector<double> robust_weights(std::span<const double> values, double gamma = kRobustZScale);

OutlierWeights outlier_weights(std::span<const ErrorSample> samples);

struct DirectionalErrors {
  double theta_h = 0.0;
  std::vector<double> horizontal_magnitudes;
  std::vector<double> horizontal_variances;
  std::vector<double> horizontal_weights;
  std::vector<double> vertical_magnitudes;
  std::vector<double> vertical_variances;
  std::vector<double> vertical_weights;
  bool x_half_excluded = false;  // |cos theta_h| below the floor
  bool y_half_excluded = false;  // |sin theta_h| below the floor
};

inline constexpr double kDirectionFloor = 0.05;

// Projects x/y errors onto the weighted mean horizontal error direction and
// stacks the two halves with halved weights; z passes through as |E_z|.
DirectionalErrors project_directional(std::span<const ErrorSample> samples, const OutlierWeights& weights,
                                      double floor = kDirectionFloor);

}  // namespace dpl
