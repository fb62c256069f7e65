#include "dpl/estimator.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <string>

#include "dpl/error.hpp"
#include "dpl/rng.hpp"

namespace dpl {

void MeasurementContext::validate() const {
  if (!true_pose && payload_key.empty()) {
    throw Error(ErrorCode::InvalidArgument, "measurement context needs a true pose or a payload key");
  }
}

bool is_positive_definite(const Mat3& m) {
  if (!m.allFinite()) return false;
  Eigen::LLT<Mat3> llt(m);
  return llt.info() == Eigen::Success;
}

Mat3 assemble_covariance(const Vec3& sigma, const Vec3& corr) {
  if (!(sigma.array() > 0.0).all() || !sigma.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be strictly positive");
  }
  if (!(corr.array().abs() < 1.0).all()) {
    throw Error(ErrorCode::InvalidArgument, "correlation coefficients must lie in (-1, 1)");
  }
  Mat3 cov = sigma.cwiseProduct(sigma).asDiagonal();
  cov(1, 0) = cov(0, 1) = corr(0) * sigma(1) * sigma(0);
  cov(2, 0) = cov(0, 2) = corr(1) * sigma(2) * sigma(0);
  cov(2, 1) = cov(1, 2) = corr(2) * sigma(2) * sigma(1);
  if (!is_positive_definite(cov)) {
    throw Error(ErrorCode::NotPositiveDefinite, "correlation triple is jointly infeasible");
  }
  return cov;
}

ErrorEstimate to_vehicle_frame(const RawEstimate& raw) {
  const Mat3 cov_raw = assemble_covariance(raw.sigma, raw.corr);
  const Quat q = canonical(raw.rotation_error);
  const Mat3 r = q.toRotationMatrix();
  ErrorEstimate out;
  out.rotation_error = q;
  out.position_error = -(r.transpose() * raw.translation_error);
  const Mat3 cov = r.transpose() * cov_raw * r;
  out.covariance = 0.5 * (cov + cov.transpose());
  return out;
}

std::pair<Vec3, Quat> exact_error(const Pose& candidate, const Pose& truth) {
  const Vec3 dx = candidate.rotation().transpose() * (truth.position() - candidate.position());
  const Quat dr = canonical(candidate.orientation().conjugate() * truth.orientation());
  return {dx, dr};
}

Vec3 SyntheticOracleConfig::reported_sigma() const {
  return sigma_reported ? *sigma_reported : Vec3(miscalibration * sigma_noise);
}

void SyntheticOracleConfig::validate() const {
  if (!(sigma_noise.array() >= 0.0).all()) {
    throw Error(ErrorCode::InvalidArgument, "oracle sigma_noise must be non-negative");
  }
  if (!(miscalibration > 0.0)) throw Error(ErrorCode::InvalidArgument, "miscalibration must be positive");
  if (!(reported_sigma().array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidArgument, "reported sigma must be positive; set sigma_reported for noise-free runs");
  }
  if (!(sigma_rot >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_rot must be non-negative");
  if (!(outlier_probability >= 0.0 && outlier_probability <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "outlier_probability must lie in [0, 1]");
  }
  if (!(outlier_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "outlier_scale must be positive");
}

SyntheticOracle::SyntheticOracle(SyntheticOracleConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

RawEstimate SyntheticOracle::estimate(const MeasurementContext& ctx, std::size_t candidate_index,
                                      const Pose& candidate, const PointCloud& /*map*/) const {
  if (!ctx.true_pose) {
    throw Error(ErrorCode::InfeasibleContext, "synthetic oracle needs the true pose");
  }
  auto [dx, dr] = exact_error(candidate, *ctx.true_pose);

  // Per-call stream: results do not depend on evaluation order.
  Rng rng(derive_seed(cfg_.seed, {static_cast<std::uint64_t>(Stream::Estimator), bits_of(ctx.timestamp),
                                  static_cast<std::uint64_t>(candidate_index)}));
  const bool outlier = cfg_.outlier_probability > 0.0 && rng.uniform() < cfg_.outlier_probability;
  const double scale = outlier ? cfg_.outlier_scale : 1.0;

  RawEstimate raw;
  for (int k = 0; k < 3; ++k) raw.translation_error(k) = dx(k) + scale * rng.normal(0.0, cfg_.sigma_noise(k));
  Vec3 rv;
  for (int k = 0; k < 3; ++k) rv(k) = rng.normal(0.0, cfg_.sigma_rot);
  raw.rotation_error = canonical(dr * quat_from_rotation_vector(rv));
  raw.sigma = cfg_.reported_sigma();
  raw.corr = Vec3::Zero();
  return raw;
}

Quat sample_rotation_perturbation(double sigma_rot, std::uint64_t seed, std::uint64_t index) {
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(Stream::RotationResiduals), index}));
  Vec3 rv;
  for (int k = 0; k < 3; ++k) rv(k) = rng.normal(0.0, sigma_rot);
  return quat_from_rotation_vector(rv);
}

std::vector<Quat> synthetic_rotation_residuals(double sigma_rot, std::uint64_t seed, std::size_t count) {
  std::vector<Quat> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(sample_rotation_perturbation(sigma_rot, seed, k));
  return out;
}

namespace {

Vec3 vec3_field(const nlohmann::json& j, const char* name) {
  const auto& a = j.at(name);
  if (!a.is_array() || a.size() != 3) throw Error(ErrorCode::ParseError, std::string(name) + " must have 3 elements");
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

Quat quat_field(const nlohmann::json& j, const char* name) {
  const auto& a = j.at(name);
  if (!a.is_array() || a.size() != 4) throw Error(ErrorCode::ParseError, std::string(name) + " must have 4 elements");
  return quat_wxyz(a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>());
}

}  // namespace

FileEstimator FileEstimator::parse(std::istream& in) {
  FileEstimator est;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RawEstimate raw;
      raw.translation_error = vec3_field(j, "translation_error");
      raw.rotation_error = quat_field(j, "rotation_error");
      raw.sigma = vec3_field(j, "sigma");
      raw.corr = vec3_field(j, "corr");
      est.table_[{j.at("key").get<std::string>(), j.at("candidate").get<std::size_t>()}] = raw;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "record line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, "record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return est;
}

FileEstimator FileEstimator::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse(in);
}

RawEstimate FileEstimator::estimate(const MeasurementContext& ctx, std::size_t candidate_index,
                                    const Pose& /*candidate*/, const PointCloud& /*map*/) const {
  auto it = table_.find({ctx.payload_key, candidate_index});
  if (it == table_.end()) {
    throw Error(ErrorCode::MissingRecord,
                "no record for key '" + ctx.payload_key + "' candidate " + std::to_string(candidate_index));
  }
  return it->second;
}

std::string estimate_record_line(const std::string& key, std::size_t candidate, const RawEstimate& raw) {
  const Quat q = canonical(raw.rotation_error);
  nlohmann::json j;
  j["key"] = key;
  j["candidate"] = candidate;
  j["translation_error"] = {raw.translation_error.x(), raw.translation_error.y(), raw.translation_error.z()};
  j["rotation_error"] = {q.w(), q.x(), q.y(), q.z()};
  j["sigma"] = {raw.sigma.x(), raw.sigma.y(), raw.sigma.z()};
  j["corr"] = {raw.corr.x(), raw.corr.y(), raw.corr.z()};
  return j.dump();
}

}  // namespace dpl
