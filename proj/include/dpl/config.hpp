#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "dpl/estimator.hpp"
#include "dpl/loss.hpp"
#include "dpl/pipeline.hpp"
#include "dpl/scenario.hpp"

namespace dpl {

struct EstimatorSettings {
  enum class Kind { Synthetic, File };
  Kind kind = Kind::Synthetic;
  SyntheticOracleConfig synthetic;
  std::filesystem::path records;  // Kind::File
};

struct RotationSettings {
  enum class Source { Synthetic, File, None };
  Source source = Source::Synthetic;
  std::size_t samples = 100000;
  std::filesystem::path file;  // Source::File
};

// Single JSON document, schema "dpl-config/1". Every key is optional except
// "schema"; unknown keys are rejected with the line they appear on.
struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: available cores
  PipelineConfig pipeline;
  EstimatorSettings estimator;
  RotationSettings rotation;
  std::size_t diagram_bins = 20;
  LossConfig loss;
  CityConfig city;
  TrajectoryConfig trajectory;
};

// Relative paths resolve against `base_dir`. Throws Error(ConfigError) with
// a "line N:" prefix where the offending key can be located.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Default configuration document (experimental parameters of the method).
std::string default_config_json();

// Sub-seeds for each random consumer, all derived from RunConfig::seed.
std::uint64_t sampling_seed(std::uint64_t master);
std::uint64_t estimator_seed(std::uint64_t master);
std::uint64_t residual_seed(std::uint64_t master);

std::shared_ptr<const ErrorEstimator> make_estimator(const RunConfig& cfg);
RotationUncertainty make_rotation_uncertainty(const RunConfig& cfg);

// Pipeline with seeds applied from cfg.seed.
Pipeline make_pipeline(const RunConfig& cfg, std::shared_ptr<const PointCloud> map = nullptr);

}  // namespace dpl
