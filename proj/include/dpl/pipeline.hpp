#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpl/estimator.hpp"
#include "dpl/gmm.hpp"
#include "dpl/metrics.hpp"
#include "dpl/sampling.hpp"
#include "dpl/uncertainty.hpp"

namespace dpl {

enum class Variant {
  Var,               // single Gaussian from the estimator output at the estimate
  VarE,              // candidate mixture, uniform weights
  VarEO,             // candidate mixture, outlier weights
  VarEODirectional,  // outlier-weighted mixture of errors projected on the horizontal error direction
};

const char* to_string(Variant v);
Variant parse_variant(const std::string& name);  // throws InvalidArgument

struct PipelineConfig {
  SamplingConfig sampling;
  ProtectionLevelQuery query;
  AlarmLimits limits;
  Variant variant = Variant::VarEO;
  std::size_t min_candidates = 2;

  void validate() const;
};

struct TimestepResult {
  double timestamp = 0.0;
  bool ok = false;
  std::string failure;
  ProtectionLevels pl;
  std::vector<ErrorSample> samples;
  OutlierWeights weights;
  std::size_t candidates_evaluated = 0;
  std::size_t candidates_excluded = 0;
  std::vector<std::string> diagnostics;
  double theta_h = 0.0;  // directional variant only
  bool x_half_excluded = false;
  bool y_half_excluded = false;
};

// Vehicle-frame position error of `estimate` relative to `truth`:
// R*^T (x_est - x*).
Vec3 true_position_error(const Pose& estimate, const Pose& truth);

class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::shared_ptr<const ErrorEstimator> estimator, RotationUncertainty ru,
           std::shared_ptr<const PointCloud> map = nullptr);

  // Throws TimestepFailure when fewer than min_candidates candidates survive.
  TimestepResult run_timestep(const MeasurementContext& ctx, const Pose& estimate) const;

  // Offsets for one timestep; the sampling seed is combined with the timestamp.
  std::vector<CandidateOffset> candidate_offsets(double timestamp) const;

  // Protection levels from already transformed samples (mixture variants).
  TimestepResult levels_from_samples(std::vector<ErrorSample> samples) const;

  const PipelineConfig& config() const { return cfg_; }
  const RotationUncertainty& rotation_uncertainty() const { return ru_; }

 private:
  TimestepResult run_var(const MeasurementContext& ctx, const Pose& estimate) const;

  PipelineConfig cfg_;
  std::shared_ptr<const ErrorEstimator> estimator_;
  RotationUncertainty ru_;
  std::shared_ptr<const PointCloud> map_;
};

struct ScenarioStep {
  double timestamp = 0.0;
  std::string key;
  Pose true_pose;
  Pose estimate;
};

struct SequenceResult {
  std::vector<TimestepResult> steps;
  std::vector<IntegrityRecord> records;  // successful timesteps only
  IntegrityReport report;
};

// Timesteps are independent; `threads` workers (0 = hardware concurrency)
// produce identical output for any thread count.
SequenceResult run_sequence(const Pipeline& pipeline, std::span<const ScenarioStep> steps,
                            std::size_t threads = 1);

// t,key,ok,pl_lat,pl_lon,pl_vert,candidates,excluded,theta_h,failure
void write_timesteps_csv(std::ostream& out, std::span<const ScenarioStep> steps,
                         std::span<const TimestepResult> results);

// Serialized outputs of one run, in the byte form written to disk.
struct RunArtifacts {
  std::string records_csv;
  std::string timesteps_csv;
  std::string report_json;
  std::string diagram_json;
};

RunArtifacts render_artifacts(const SequenceResult& result, std::span<const ScenarioStep> steps,
                              const AlarmLimits& limits, std::size_t diagram_bins);

}  // namespace dpl
