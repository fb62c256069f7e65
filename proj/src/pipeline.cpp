#include "dpl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "dpl/error.hpp"
#include "dpl/normal.hpp"
#include "dpl/rng.hpp"

namespace dpl {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Var: return "VAR";
    case Variant::VarE: return "VAR_E";
    case Variant::VarEO: return "VAR_EO";
    case Variant::VarEODirectional: return "VAR_EO_DIRECTIONAL";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::Var, Variant::VarE, Variant::VarEO, Variant::VarEODirectional}) {
    if (name == to_string(v)) return v;
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown variant '" + name + "' (expected VAR, VAR_E, VAR_EO or VAR_EO_DIRECTIONAL)");
}

void PipelineConfig::validate() const {
  if (min_candidates < 1) throw Error(ErrorCode::InvalidArgument, "min_candidates must be at least 1");
  sampling.validate(min_candidates);
  query.validate();
  limits.validate();
}

Vec3 true_position_error(const Pose& estimate, const Pose& truth) {
  return truth.rotation().transpose() * (estimate.position() - truth.position());
}

Pipeline::Pipeline(PipelineConfig cfg, std::shared_ptr<const ErrorEstimator> estimator, RotationUncertainty ru,
                   std::shared_ptr<const PointCloud> map)
    : cfg_(std::move(cfg)), estimator_(std::move(estimator)), ru_(std::move(ru)), map_(std::move(map)) {
  cfg_.validate();
  if (!estimator_) throw Error(ErrorCode::InvalidArgument, "pipeline needs an estimator");
  if (!map_) map_ = std::make_shared<const PointCloud>();
}

std::vector<CandidateOffset> Pipeline::candidate_offsets(double timestamp) const {
  SamplingConfig sc = cfg_.sampling;
  sc.seed = derive_seed(cfg_.sampling.seed, {bits_of(timestamp)});
  return sample_candidates(sc, cfg_.min_candidates);
}

TimestepResult Pipeline::run_var(const MeasurementContext& ctx, const Pose& estimate) const {
  TimestepResult result;
  result.timestamp = ctx.timestamp;
  const ErrorEstimate est = to_vehicle_frame(estimator_->estimate(ctx, 0, estimate, *map_));
  result.samples.push_back(ErrorSample{est.position_error, est.covariance, CandidateOffset{}});
  result.weights = OutlierWeights::uniform(1);
  result.candidates_evaluated = 1;

  const double z = normal_quantile(1.0 - 0.5 * cfg_.query.integrity_risk);
  std::array<double, 3> pl{};
  for (int d = 0; d < 3; ++d) {
    pl[d] = std::abs(est.position_error(d)) + z * std::sqrt(est.covariance(d, d));
  }
  result.pl = {pl[0], pl[1], pl[2]};
  result.ok = true;
  return result;
}

TimestepResult Pipeline::levels_from_samples(std::vector<ErrorSample> samples) const {
  TimestepResult result;
  result.weights = cfg_.variant == Variant::VarE ? OutlierWeights::uniform(samples.size())
                                                 : outlier_weights(samples);

  if (cfg_.variant == Variant::VarEODirectional) {
    const DirectionalErrors dir = project_directional(samples, result.weights);
    result.theta_h = dir.theta_h;
    result.x_half_excluded = dir.x_half_excluded;
    result.y_half_excluded = dir.y_half_excluded;
    if (dir.x_half_excluded) result.diagnostics.push_back("degenerate direction: x half excluded");
    if (dir.y_half_excluded) result.diagnostics.push_back("degenerate direction: y half excluded");
    const double horizontal = protection_level(
        build_gmm(dir.horizontal_magnitudes, dir.horizontal_variances, dir.horizontal_weights), cfg_.query);
    const double vertical = protection_level(
        build_gmm(dir.vertical_magnitudes, dir.vertical_variances, dir.vertical_weights), cfg_.query);
    result.pl = {horizontal, horizontal, vertical};
  } else {
    std::array<DimensionSamples, 3> dims;
    for (int d = 0; d < 3; ++d) {
      for (const auto& s : samples) {
        dims[d].errors.push_back(s.position_error(d));
        dims[d].variances.push_back(s.covariance(d, d));
      }
      dims[d].weights = result.weights.per_dim[d];
    }
    result.pl = protection_levels_all(dims, cfg_.query);
  }
  result.samples = std::move(samples);
  result.ok = true;
  return result;
}

TimestepResult Pipeline::run_timestep(const MeasurementContext& ctx, const Pose& estimate) const {
  ctx.validate();
  if (cfg_.variant == Variant::Var) return run_var(ctx, estimate);

  const auto offsets = candidate_offsets(ctx.timestamp);
  std::vector<ErrorSample> samples;
  std::vector<std::string> diagnostics;
  samples.reserve(offsets.size());
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const Pose candidate = apply_offset(estimate, offsets[i]);
    try {
      const ErrorEstimate est = to_vehicle_frame(estimator_->estimate(ctx, i, candidate, *map_));
      samples.push_back(transform_error(est, offsets[i], ru_));
    } catch (const Error& e) {
      diagnostics.push_back("candidate " + std::to_string(i) + " dropped: " + e.what());
    }
  }
  if (samples.size() < cfg_.min_candidates) {
    throw Error(ErrorCode::TimestepFailure, "only " + std::to_string(samples.size()) + " of " +
                                                std::to_string(offsets.size()) + " candidates survived");
  }

  TimestepResult result = levels_from_samples(std::move(samples));
  result.timestamp = ctx.timestamp;
  result.candidates_evaluated = offsets.size();
  result.candidates_excluded = offsets.size() - result.samples.size();
  result.diagnostics.insert(result.diagnostics.begin(), diagnostics.begin(), diagnostics.end());
  return result;
}

SequenceResult run_sequence(const Pipeline& pipeline, std::span<const ScenarioStep> steps, std::size_t threads) {
  SequenceResult out;
  out.steps.resize(steps.size());

  auto run_one = [&](std::size_t k) {
    const ScenarioStep& step = steps[k];
    MeasurementContext ctx{step.timestamp, step.true_pose, step.key};
    try {
      out.steps[k] = pipeline.run_timestep(ctx, step.estimate);
    } catch (const std::exception& e) {
      TimestepResult failed;
      failed.timestamp = step.timestamp;
      failed.ok = false;
      failed.failure = e.what();
      out.steps[k] = std::move(failed);
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(steps.size(), 1));
  if (threads <= 1) {
    for (std::size_t k = 0; k < steps.size(); ++k) run_one(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t k = next++; k < steps.size(); k = next++) run_one(k);
      });
    }
  }

  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (!out.steps[k].ok) continue;
    out.records.push_back(IntegrityRecord{steps[k].timestamp, out.steps[k].pl,
                                          true_position_error(steps[k].estimate, steps[k].true_pose)});
  }
  out.report = evaluate_integrity(out.records, pipeline.config().limits);
  return out;
}

void write_timesteps_csv(std::ostream& out, std::span<const ScenarioStep> steps,
                         std::span<const TimestepResult> results) {
  if (steps.size() != results.size()) throw Error(ErrorCode::LengthMismatch, "steps and results differ in length");
  out << "t,key,ok,pl_lat,pl_lon,pl_vert,candidates,excluded,theta_h,failure\n" << std::setprecision(17);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& r = results[i];
    std::string failure = r.failure;
    std::size_t at = 0;
    while ((at = failure.find('"', at)) != std::string::npos) {
      failure.insert(at, 1, '"');
      at += 2;
    }
    out << steps[i].timestamp << ',' << steps[i].key << ',' << (r.ok ? 1 : 0) << ',';
    if (r.ok) {
      out << r.pl.lateral << ',' << r.pl.longitudinal << ',' << r.pl.vertical;
    } else {
      out << ",,";
    }
    out << ',' << r.candidates_evaluated << ',' << r.candidates_excluded << ',' << r.theta_h << ",\"" << failure
        << "\"\n";
  }
}

RunArtifacts render_artifacts(const SequenceResult& result, std::span<const ScenarioStep> steps,
                              const AlarmLimits& limits, std::size_t diagram_bins) {
  RunArtifacts a;
  std::ostringstream records;
  write_records_csv(records, result.records);
  a.records_csv = records.str();
  std::ostringstream timesteps;
  write_timesteps_csv(timesteps, steps, result.steps);
  a.timesteps_csv = timesteps.str();
  a.report_json = report_to_json(result.report, limits);
  a.diagram_json = diagram_to_json(integrity_diagram(result.records, limits, diagram_bins));
  return a;
}

}  // namespace dpl
