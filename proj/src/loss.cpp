#include "dpl/loss.hpp"

#include <Eigen/Cholesky>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <string>

#include "dpl/error.hpp"
#include "dpl/estimator.hpp"

namespace dpl {

void LossConfig::validate() const {
  if (!(alpha_huber >= 0.0 && alpha_mle >= 0.0 && alpha_ang >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "loss weights must be non-negative");
  }
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "Huber delta must be positive");
}

double huber_loss(const Vec3& pred, const Vec3& truth, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "Huber delta must be positive");
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double e = std::abs(pred(k) - truth(k));
    sum += e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
  }
  return sum;
}

double gaussian_nll(const Vec3& truth, const Vec3& pred, const Mat3& cov) {
  Eigen::LLT<Mat3> llt(cov);
  if (!cov.allFinite() || llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "covariance is not positive definite");
  }
  const Mat3 lower = llt.matrixL();
  const Vec3 e = truth - pred;
  const Vec3 whitened = lower.triangularView<Eigen::Lower>().solve(e);
  const double half_log_det = lower.diagonal().array().log().sum();
  return half_log_det + 0.5 * whitened.squaredNorm();
}

double total_loss(const LossConfig& cfg, const Vec3& pred_t, const Vec3& true_t, const Quat& pred_r,
                  const Quat& true_r, const Mat3& cov) {
  cfg.validate();
  double total = 0.0;
  if (cfg.alpha_huber != 0.0) total += cfg.alpha_huber * huber_loss(pred_t, true_t, cfg.delta);
  if (cfg.alpha_mle != 0.0) total += cfg.alpha_mle * gaussian_nll(true_t, pred_t, cov);
  if (cfg.alpha_ang != 0.0) total += cfg.alpha_ang * quaternion_angular_distance(true_r, pred_r);
  return total;
}

std::vector<CalibrationRow> read_calibration_csv(std::istream& in) {
  std::vector<CalibrationRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "calibration line " + std::to_string(line_no) + ": ";
    if (!header_seen) {
      header_seen = true;
      if (line != kCalibrationHeader) throw Error(ErrorCode::ParseError, where + "unexpected header");
      continue;
    }
    std::array<double, 20> v{};
    std::istringstream fields(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(fields, cell, ',')) {
      if (k >= v.size()) throw Error(ErrorCode::ParseError, where + "too many fields");
      try {
        std::size_t used = 0;
        v[k] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, where + "bad number '" + cell + "'");
      }
      ++k;
    }
    if (k != v.size()) throw Error(ErrorCode::ParseError, where + "expected 20 fields");
    CalibrationRow r;
    r.pred_t = Vec3(v[0], v[1], v[2]);
    r.true_t = Vec3(v[3], v[4], v[5]);
    r.sigma = Vec3(v[6], v[7], v[8]);
    r.corr = Vec3(v[9], v[10], v[11]);
    r.pred_r = Quat(v[12], v[13], v[14], v[15]);
    r.true_r = Quat(v[16], v[17], v[18], v[19]);
    if (!(r.sigma.array() > 0.0).all()) throw Error(ErrorCode::ParseError, where + "sigma must be positive");
    if (!(r.corr.array().abs() < 1.0).all()) throw Error(ErrorCode::ParseError, where + "eta must lie in (-1, 1)");
    if (r.pred_r.norm() < 1e-9 || r.true_r.norm() < 1e-9) {
      throw Error(ErrorCode::ParseError, where + "zero quaternion");
    }
    r.pred_r.normalize();
    r.true_r.normalize();
    rows.push_back(r);
  }
  if (!header_seen) throw Error(ErrorCode::ParseError, "calibration file is empty");
  return rows;
}

void write_calibration_csv(std::ostream& out, const std::vector<CalibrationRow>& rows) {
  out << kCalibrationHeader << '\n' << std::setprecision(17);
  for (const auto& r : rows) {
    for (const Vec3* v : {&r.pred_t, &r.true_t, &r.sigma, &r.corr}) out << v->x() << ',' << v->y() << ',' << v->z() << ',';
    out << r.pred_r.w() << ',' << r.pred_r.x() << ',' << r.pred_r.y() << ',' << r.pred_r.z() << ',';
    out << r.true_r.w() << ',' << r.true_r.x() << ',' << r.true_r.y() << ',' << r.true_r.z() << '\n';
  }
}

CalibrationStats calibrate(const std::vector<CalibrationRow>& rows, const LossConfig& cfg) {
  cfg.validate();
  CalibrationStats stats;
  stats.rows = rows.size();
  for (const auto& r : rows) {
    const Mat3 cov = assemble_covariance(r.sigma, r.corr);
    const double h = huber_loss(r.pred_t, r.true_t, cfg.delta);
    const double n = gaussian_nll(r.true_t, r.pred_t, cov);
    const double a = quaternion_angular_distance(r.true_r, r.pred_r);
    stats.mean_huber += h;
    stats.mean_nll += n;
    stats.mean_angular += a;
    stats.mean_total += cfg.alpha_huber * h + cfg.alpha_mle * n + cfg.alpha_ang * a;
    stats.residuals.push_back(canonical(r.true_r * r.pred_r.inverse()));
  }
  if (!rows.empty()) {
    const double inv = 1.0 / static_cast<double>(rows.size());
    stats.mean_huber *= inv;
    stats.mean_nll *= inv;
    stats.mean_angular *= inv;
    stats.mean_total *= inv;
  }
  return stats;
}

std::string calibration_to_json(const CalibrationStats& stats, const LossConfig& cfg) {
  nlohmann::json j;
  j["rows"] = stats.rows;
  j["delta"] = cfg.delta;
  j["weights"] = {{"huber", cfg.alpha_huber}, {"mle", cfg.alpha_mle}, {"angular", cfg.alpha_ang}};
  j["mean_huber"] = stats.mean_huber;
  j["mean_nll"] = stats.mean_nll;
  j["mean_angular"] = stats.mean_angular;
  j["mean_total"] = stats.mean_total;
  return j.dump(2) + "\n";
}

}  // namespace dpl
