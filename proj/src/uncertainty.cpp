#include "dpl/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <numeric>
#include <ostream>
#include <string>

#include "dpl/error.hpp"

namespace dpl {

Mat3 RotationUncertainty::correction(const Vec3& v) const {
  Mat3 out;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) out(a, b) = v.dot(blocks[a][b] * v);
  return out;
}

RotationUncertainty RotationUncertainty::zero() {
  RotationUncertainty ru;
  for (auto& row : ru.blocks)
    for (auto& block : row) block.setZero();
  return ru;
}

RotationUncertainty precompute_q(std::span<const Quat> rotation_samples, std::size_t min_samples) {
  if (rotation_samples.size() < min_samples || rotation_samples.empty()) {
    throw Error(ErrorCode::InsufficientSamples,
                "need at least " + std::to_string(std::max<std::size_t>(min_samples, 1)) +
                    " rotation samples, got " + std::to_string(rotation_samples.size()));
  }
  RotationUncertainty ru = RotationUncertainty::zero();
  for (const Quat& q : rotation_samples) {
    const Mat3 dev = canonical(q).toRotationMatrix() - Mat3::Identity();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) ru.blocks[a][b] += dev.row(a).transpose() * dev.row(b);
  }
  const double n = static_cast<double>(rotation_samples.size());
  for (auto& row : ru.blocks)
    for (auto& block : row) block /= n;
  ru.sample_count = rotation_samples.size();
  return ru;
}

std::vector<Quat> read_rotation_residuals(std::istream& in) {
  std::vector<Quat> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto& q = j.at("q");
      if (!q.is_array() || q.size() != 4) throw Error(ErrorCode::ParseError, "q must have 4 elements");
      out.push_back(quat_wxyz(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "residual line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, "residual line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Quat> load_rotation_residuals(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_rotation_residuals(in);
}

void write_rotation_residuals(std::ostream& out, std::span<const Quat> residuals) {
  for (const Quat& raw : residuals) {
    const Quat q = canonical(raw);
    nlohmann::json j;
    j["q"] = {q.w(), q.x(), q.y(), q.z()};
    out << j.dump() << '\n';
  }
}

Mat3 estimate_rotation(const ErrorEstimate& candidate_estimate, const CandidateOffset& offset) {
  return (offset.rotation * candidate_estimate.rotation_error).toRotationMatrix();
}

ErrorSample transform_error(const ErrorEstimate& candidate_estimate, const CandidateOffset& offset,
                            const RotationUncertainty& ru) {
  const Mat3 r = estimate_rotation(candidate_estimate, offset);
  const Vec3 shift = r.transpose() * offset.translation;

  ErrorSample s;
  s.source_offset = offset;
  s.position_error = candidate_estimate.position_error - shift;
  const Mat3 cov = candidate_estimate.covariance + ru.correction(shift);
  s.covariance = 0.5 * (cov + cov.transpose());
  if (!is_positive_definite(s.covariance)) {
    throw Error(ErrorCode::CorrectionNotPSD, "rotation-corrected covariance is not positive definite");
  }
  return s;
}

OutlierWeights OutlierWeights::uniform(std::size_t n) {
  OutlierWeights w;
  for (auto& d : w.per_dim) d.assign(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
  return w;
}

namespace {

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

std::vector<double> robust_weights(std::span<const double> values, double gamma) {
  const std::size_t n = values.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "robust_weights needs at least one value");
  std::vector<double> uniform(n, 1.0 / static_cast<double>(n));

  const double med = median_of(std::vector<double>(values.begin(), values.end()));
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(values[i] - med);

  if (std::all_of(dev.begin(), dev.end(), [&](double d) { return d == dev.front(); })) return uniform;

  double scale = median_of(dev);
  if (scale == 0.0) scale = std::accumulate(dev.begin(), dev.end(), 0.0) / static_cast<double>(n);

  // Softmax of -gamma * Z, shifted by the smallest Z for stability.
  const double z_min = *std::min_element(dev.begin(), dev.end()) / scale;
  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(-gamma * (dev[i] / scale - z_min));
    total += w[i];
  }
  for (double& wi : w) wi /= total;
  return w;
}

OutlierWeights outlier_weights(std::span<const ErrorSample> samples) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "outlier_weights needs samples");
  OutlierWeights out;
  std::vector<double> column(samples.size());
  for (int d = 0; d < 3; ++d) {
    for (std::size_t i = 0; i < samples.size(); ++i) column[i] = samples[i].position_error(d);
    out.per_dim[d] = robust_weights(column);
  }
  return out;
}

DirectionalErrors project_directional(std::span<const ErrorSample> samples, const OutlierWeights& weights,
                                      double floor) {
  const std::size_t n = samples.size();
  if (weights.size() != n) throw Error(ErrorCode::LengthMismatch, "weights do not match samples");

  DirectionalErrors out;
  double wx_ex = 0.0, wy_ey = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wx_ex += weights.x()[i] * samples[i].position_error.x();
    wy_ey += weights.y()[i] * samples[i].position_error.y();
  }
  out.theta_h = std::atan2(wy_ey, wx_ex);
  const double c = std::cos(out.theta_h);
  const double s = std::sin(out.theta_h);
  out.x_half_excluded = std::abs(c) < floor;
  out.y_half_excluded = std::abs(s) < floor;

  // Halves are weighted 0.5 each; a dropped half leaves the other at 1.
  const double half_weight = (out.x_half_excluded || out.y_half_excluded) ? 1.0 : 0.5;
  if (!out.x_half_excluded) {
    for (std::size_t i = 0; i < n; ++i) {
      out.horizontal_magnitudes.push_back(std::abs(samples[i].position_error.x() / c));
      out.horizontal_variances.push_back(std::abs(samples[i].covariance(0, 0) / (c * c)));
      out.horizontal_weights.push_back(half_weight * weights.x()[i]);
    }
  }
  if (!out.y_half_excluded) {
    for (std::size_t i = 0; i < n; ++i) {
      out.horizontal_magnitudes.push_back(std::abs(samples[i].position_error.y() / s));
      out.horizontal_variances.push_back(std::abs(samples[i].covariance(1, 1) / (s * s)));
      out.horizontal_weights.push_back(half_weight * weights.y()[i]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.vertical_magnitudes.push_back(std::abs(samples[i].position_error.z()));
    out.vertical_variances.push_back(samples[i].covariance(2, 2));
    out.vertical_weights.push_back(weights.z()[i]);
  }
  return out;
}

}  // namespace dpl
