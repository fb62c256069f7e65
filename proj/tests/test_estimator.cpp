#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dpl/error.hpp"
#include "dpl/estimator.hpp"
#include "dpl/rng.hpp"
#include "dpl/sampling.hpp"

using dpl::Mat3;
using dpl::Pose;
using dpl::Quat;
using dpl::Vec3;

namespace {

dpl::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const dpl::Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return dpl::ErrorCode::InvalidArgument;
}

Quat random_quat(dpl::Rng& rng) { return Quat(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized(); }

}  // namespace

TEST_CASE("assemble_covariance") {
  CHECK(dpl::assemble_covariance(Vec3(1, 1, 1), Vec3::Zero()) == Mat3::Identity());
  CHECK(dpl::assemble_covariance(Vec3(2, 3, 4), Vec3::Zero()) == Vec3(4, 9, 16).asDiagonal().toDenseMatrix());

  // The infeasible triple has a negative eigenvalue.
  Mat3 bad;
  bad << 1, 0.9, 0.9, 0.9, 1, -0.9, 0.9, -0.9, 1;
  REQUIRE(Eigen::SelfAdjointEigenSolver<Mat3>(bad).eigenvalues().minCoeff() < 0.0);
  CHECK(code_of([] { dpl::assemble_covariance(Vec3(1, 1, 1), Vec3(0.9, 0.9, -0.9)); }) ==
        dpl::ErrorCode::NotPositiveDefinite);
  CHECK(code_of([] { dpl::assemble_covariance(Vec3(1, 0, 1), Vec3::Zero()); }) == dpl::ErrorCode::InvalidArgument);
  CHECK(code_of([] { dpl::assemble_covariance(Vec3(1, 1, 1), Vec3(1.0, 0, 0)); }) == dpl::ErrorCode::InvalidArgument);

  SUBCASE("round trip") {
    dpl::Rng rng(20);
    int checked = 0;
    for (int k = 0; k < 500; ++k) {
      const Vec3 s(rng.uniform(0.01, 5), rng.uniform(0.01, 5), rng.uniform(0.01, 5));
      const Vec3 e(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6));
      Mat3 c;
      try {
        c = dpl::assemble_covariance(s, e);
      } catch (const dpl::Error&) {
        continue;
      }
      ++checked;
      const Vec3 s2 = c.diagonal().cwiseSqrt();
      CHECK((s2 - s).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(c(1, 0) / (s2(1) * s2(0)) - e(0)) < 1e-12);
      CHECK(std::abs(c(2, 0) / (s2(2) * s2(0)) - e(1)) < 1e-12);
      CHECK(std::abs(c(2, 1) / (s2(2) * s2(1)) - e(2)) < 1e-12);
    }
    CHECK(checked > 300);
  }
}

TEST_CASE("to_vehicle_frame") {
  dpl::RawEstimate raw;
  raw.translation_error = Vec3(0.3, -1.2, 0.5);
  raw.sigma = Vec3(0.5, 1.0, 0.2);
  raw.corr = Vec3(0.3, -0.1, 0.2);
  auto out = dpl::to_vehicle_frame(raw);
  CHECK(out.position_error == -raw.translation_error);
  CHECK((out.covariance - dpl::assemble_covariance(raw.sigma, raw.corr)).norm() < 1e-15);

  dpl::RawEstimate yaw;
  const double h = std::sqrt(0.5);
  yaw.rotation_error = dpl::quat_wxyz(h, 0, 0, h);
  yaw.translation_error = Vec3(1, 0, 0);
  Mat3 r;  // 90 degrees about z
  r << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Vec3 expected = -(r.transpose() * Vec3(1, 0, 0));
  CHECK((dpl::to_vehicle_frame(yaw).position_error - expected).norm() < 1e-12);
  CHECK((expected - Vec3(0, 1, 0)).norm() == 0.0);

  dpl::Rng rng(21);
  for (int k = 0; k < 200; ++k) {
    raw.rotation_error = random_quat(rng);
    const Mat3 before = dpl::assemble_covariance(raw.sigma, raw.corr);
    const auto v = dpl::to_vehicle_frame(raw);
    CHECK(std::abs(v.covariance.trace() - before.trace()) < 1e-9);
    CHECK(std::abs(v.covariance.determinant() - before.determinant()) < 1e-9);
    const Vec3 e0 = Eigen::SelfAdjointEigenSolver<Mat3>(before).eigenvalues();
    const Vec3 e1 = Eigen::SelfAdjointEigenSolver<Mat3>(v.covariance).eigenvalues();
    CHECK((e0 - e1).norm() < 1e-9);
    CHECK((v.covariance - v.covariance.transpose()).norm() < 1e-12);
    CHECK(dpl::is_positive_definite(v.covariance));
  }
}

TEST_CASE("measurement context") {
  dpl::MeasurementContext ctx;
  CHECK_THROWS_AS(ctx.validate(), dpl::Error);
  ctx.payload_key = "frame-1";
  CHECK_NOTHROW(ctx.validate());
}

TEST_CASE("synthetic oracle") {
  dpl::SyntheticOracleConfig zero;
  zero.sigma_noise = Vec3::Zero();
  zero.sigma_rot = 0.0;
  zero.sigma_reported = Vec3::Ones();
  const dpl::SyntheticOracle oracle(zero);
  const dpl::PointCloud map;

  dpl::Rng rng(22);
  const Pose truth(Vec3(4, -2, 1), random_quat(rng));
  dpl::MeasurementContext ctx;
  ctx.timestamp = 1.5;
  ctx.true_pose = truth;

  const auto same = oracle.estimate(ctx, 0, truth, map);
  CHECK(same.translation_error.norm() < 1e-12);
  CHECK(dpl::quaternion_angular_distance(same.rotation_error, Quat::Identity()) < 1e-12);

  for (int k = 0; k < 50; ++k) {
    dpl::CandidateOffset off;
    off.translation = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    off.rotation = dpl::quat_from_yaw_pitch_roll(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
    const Pose candidate = dpl::apply_offset(truth, off);
    const auto raw = oracle.estimate(ctx, k, candidate, map);
    // The truth position seen from the candidate frame.
    const Vec3 expected = dpl::pose_to_transform(dpl::inverse(candidate)).apply(truth.position());
    CHECK((raw.translation_error - expected).norm() < 1e-9);
    CHECK((raw.translation_error + off.rotation.conjugate() * off.translation).norm() < 1e-9);
    const Quat back = candidate.orientation() * raw.rotation_error;
    CHECK(dpl::quaternion_angular_distance(back, truth.orientation()) < 1e-9);
  }

  dpl::MeasurementContext blind;
  blind.payload_key = "x";
  CHECK(code_of([&] { oracle.estimate(blind, 0, truth, map); }) == dpl::ErrorCode::InfeasibleContext);

  SUBCASE("noisy oracle is reproducible") {
    dpl::SyntheticOracleConfig cfg;
    cfg.seed = 99;
    const dpl::SyntheticOracle a(cfg), b(cfg);
    const Pose cand(Vec3(4.5, -2, 1), truth.orientation());
    for (std::size_t i = 0; i < 10; ++i) {
      const auto ra = a.estimate(ctx, i, cand, map);
      const auto rb = b.estimate(ctx, i, cand, map);
      CHECK(ra.translation_error == rb.translation_error);
      CHECK(ra.rotation_error.coeffs() == rb.rotation_error.coeffs());
    }
    CHECK(a.estimate(ctx, 0, cand, map).translation_error != a.estimate(ctx, 1, cand, map).translation_error);
    CHECK(a.estimate(ctx, 0, cand, map).sigma == Vec3(0.2, 0.2, 0.1));
    cfg.miscalibration = 0.5;
    CHECK(dpl::SyntheticOracle(cfg).estimate(ctx, 0, cand, map).sigma == Vec3(0.1, 0.1, 0.05));
  }

  SUBCASE("noise statistics") {
    dpl::SyntheticOracleConfig cfg;
    cfg.seed = 5;
    cfg.sigma_noise = Vec3(0.3, 0.2, 0.1);
    const dpl::SyntheticOracle noisy(cfg);
    const Pose cand = truth;
    Vec3 sum = Vec3::Zero(), sum2 = Vec3::Zero();
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const Vec3 e = noisy.estimate(ctx, i, cand, map).translation_error;
      sum += e;
      sum2 += e.cwiseProduct(e);
    }
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(sum(k) / n) < 4 * cfg.sigma_noise(k) / std::sqrt(n));
      CHECK(std::sqrt(sum2(k) / n) == doctest::Approx(cfg.sigma_noise(k)).epsilon(0.03));
    }
  }

  dpl::SyntheticOracleConfig invalid;
  invalid.sigma_noise = Vec3::Zero();
  CHECK_THROWS_AS(dpl::SyntheticOracle{invalid}, dpl::Error);
}

TEST_CASE("file estimator") {
  dpl::RawEstimate raw;
  raw.translation_error = Vec3(0.1, -0.25, 1.0 / 3.0);
  raw.rotation_error = dpl::quat_from_yaw_pitch_roll(0.01, -0.02, 0.003);
  raw.sigma = Vec3(0.2, 0.3, 0.1);
  raw.corr = Vec3(0.1, 0.0, -0.2);
  std::stringstream file;
  file << dpl::estimate_record_line("frame-7", 3, raw) << "\n\n"
       << dpl::estimate_record_line("frame-7", 4, dpl::RawEstimate{}) << "\n";
  const auto est = dpl::FileEstimator::parse(file);
  CHECK(est.size() == 2);

  dpl::MeasurementContext ctx;
  ctx.payload_key = "frame-7";
  const auto got = est.estimate(ctx, 3, Pose::identity(), dpl::PointCloud{});
  CHECK(got.translation_error == raw.translation_error);
  CHECK(got.rotation_error.coeffs() == raw.rotation_error.coeffs());
  CHECK(got.sigma == raw.sigma);
  CHECK(got.corr == raw.corr);

  CHECK(code_of([&] { est.estimate(ctx, 5, Pose::identity(), dpl::PointCloud{}); }) == dpl::ErrorCode::MissingRecord);
  ctx.payload_key = "other";
  CHECK(code_of([&] { est.estimate(ctx, 3, Pose::identity(), dpl::PointCloud{}); }) == dpl::ErrorCode::MissingRecord);

  std::stringstream broken("{\"key\": \"a\", \"candidate\": 0, \"sigma\": [1, 1]}\n");
  CHECK(code_of([&] { dpl::FileEstimator::parse(broken); }) == dpl::ErrorCode::ParseError);
}
