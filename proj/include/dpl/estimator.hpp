#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpl/geometry.hpp"

namespace dpl {

struct MeasurementContext {
  double timestamp = 0.0;
  std::optional<Pose> true_pose;  // synthetic / evaluation mode only
  std::string payload_key;        // opaque handle to an external record

  // Throws InvalidArgument when neither a true pose nor a key is present.
  void validate() const;
};

// Raw estimator output in the frame of the evaluated state.
// corr holds (eta21, eta31, eta32).
struct RawEstimate {
  Vec3 translation_error = Vec3::Zero();
  Quat rotation_error = Quat::Identity();
  Vec3 sigma = Vec3::Ones();
  Vec3 corr = Vec3::Zero();
};

// Position error and covariance expressed in the vehicle frame.
struct ErrorEstimate {
  Vec3 position_error = Vec3::Zero();
  Quat rotation_error = Quat::Identity();
  Mat3 covariance = Mat3::Identity();
};

// Cholesky success with no slack.
bool is_positive_definite(const Mat3& m);

// Sigma on the diagonal, eta_ij * sigma_i * sigma_j off the diagonal.
// Throws InvalidArgument for sigma <= 0 or |eta| >= 1, NotPositiveDefinite
// when the correlation triple is jointly infeasible.
Mat3 assemble_covariance(const Vec3& sigma, const Vec3& corr);

// position = -R^T dx, covariance = R^T S R, with R from the rotation error.
ErrorEstimate to_vehicle_frame(const RawEstimate& raw);

// Pluggable per-candidate error estimator. Implementations must be safe to
// call concurrently from several threads.
class ErrorEstimator {
 public:
  virtual ~ErrorEstimator() = default;

  virtual RawEstimate estimate(const MeasurementContext& ctx, std::size_t candidate_index,
                               const Pose& candidate, const PointCloud& map) const = 0;
};

// Exact translation and rotation error of `candidate` with respect to
// `truth`, expressed in the candidate frame: dx = R_c^T (x* - x_c),
// dr = q_c^-1 * q*.
std::pair<Vec3, Quat> exact_error(const Pose& candidate, const Pose& truth);

struct SyntheticOracleConfig {
  Vec3 sigma_noise{0.2, 0.2, 0.1};  // meters, per axis of the evaluated frame; may be 0
  double miscalibration = 1.0;       // reported sigma = miscalibration * sigma_noise
  std::optional<Vec3> sigma_reported;  // overrides the reported sigma when set
  double sigma_rot = 0.005;          // radians, per axis of the rotation perturbation
  double outlier_probability = 0.0;
  double outlier_scale = 10.0;
  std::uint64_t seed = 0;

  Vec3 reported_sigma() const;
  void validate() const;
};

// Stand-in for a learned estimator: the exact error from the true pose,
// corrupted by seeded Gaussian noise. The map is not consulted.
class SyntheticOracle final : public ErrorEstimator {
 public:
  explicit SyntheticOracle(SyntheticOracleConfig cfg);

  RawEstimate estimate(const MeasurementContext& ctx, std::size_t candidate_index,
                       const Pose& candidate, const PointCloud& map) const override;

  const SyntheticOracleConfig& config() const { return cfg_; }

 private:
  SyntheticOracleConfig cfg_;
};

// Draws a rotation perturbation from the same distribution the oracle uses.
Quat sample_rotation_perturbation(double sigma_rot, std::uint64_t seed, std::uint64_t index);

// `count` perturbations, index 0..count-1; stands in for calibration residuals.
std::vector<Quat> synthetic_rotation_residuals(double sigma_rot, std::uint64_t seed, std::size_t count);

// Lookup table over JSON-lines records, one per (key, candidate):
//   {"key": "...", "candidate": 0, "translation_error": [x, y, z],
//    "rotation_error": [w, x, y, z], "sigma": [..], "corr": [e21, e31, e32]}
class FileEstimator final : public ErrorEstimator {
 public:
  static FileEstimator load(const std::filesystem::path& path);
  static FileEstimator parse(std::istream& in);

  RawEstimate estimate(const MeasurementContext& ctx, std::size_t candidate_index,
                       const Pose& candidate, const PointCloud& map) const override;

  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::pair<std::string, std::size_t>, RawEstimate> table_;
};

// One JSON-lines record in the FileEstimator format.
std::string estimate_record_line(const std::string& key, std::size_t candidate,
                                 const RawEstimate& raw);

}  // namespace dpl
