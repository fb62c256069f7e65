#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dpl/geometry.hpp"

namespace dpl {

struct LossConfig {
  double alpha_huber = 1.0;
  double alpha_mle = 1.0;
  double alpha_ang = 1.0;
  double delta = 1.0;  // Huber threshold, meters

  void validate() const;
};

// Sum over axes of 0.5 e^2 (|e| <= delta) or delta (|e| - delta / 2).
double huber_loss(const Vec3& pred, const Vec3& truth, double delta);

// 0.5 log|S| + 0.5 e^T S^-1 e with e = truth - pred, no constant term.
// Evaluated through a Cholesky factor; throws NotPositiveDefinite.
double gaussian_nll(const Vec3& truth, const Vec3& pred, const Mat3& cov);

// Weighted sum of the Huber, likelihood and angular terms. The angular term
// is quaternion_angular_distance(true_r, pred_r).
double total_loss(const LossConfig& cfg, const Vec3& pred_t, const Vec3& true_t, const Quat& pred_r,
                  const Quat& true_r, const Mat3& cov);

// One calibration row: prediction and ground truth of translation and
// rotation error plus the predicted sigma and correlations.
struct CalibrationRow {
  Vec3 pred_t = Vec3::Zero();
  Vec3 true_t = Vec3::Zero();
  Vec3 sigma = Vec3::Ones();
  Vec3 corr = Vec3::Zero();  // eta21, eta31, eta32
  Quat pred_r = Quat::Identity();
  Quat true_r = Quat::Identity();
};

inline constexpr const char* kCalibrationHeader =
    "pred_x,pred_y,pred_z,true_x,true_y,true_z,sigma_x,sigma_y,sigma_z,eta21,eta31,eta32,"
    "pred_qw,pred_qx,pred_qy,pred_qz,true_qw,true_qx,true_qy,true_qz";

// Throws ParseError with the line number on schema violations.
std::vector<CalibrationRow> read_calibration_csv(std::istream& in);
void write_calibration_csv(std::ostream& out, const std::vector<CalibrationRow>& rows);

struct CalibrationStats {
  std::size_t rows = 0;
  double mean_huber = 0.0;
  double mean_nll = 0.0;
  double mean_angular = 0.0;
  double mean_total = 0.0;
  std::vector<Quat> residuals;  // true_r * pred_r^-1 per row
};

CalibrationStats calibrate(const std::vector<CalibrationRow>& rows, const LossConfig& cfg);
std::string calibration_to_json(const CalibrationStats& stats, const LossConfig& cfg);

}  // namespace dpl
