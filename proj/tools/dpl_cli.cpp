// dpl: scenario generation, protection-level runs, metrics and calibration.
//
// Exit codes: 0 success, 2 configuration error, 3 input I/O error,
// 4 pipeline failure.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "dpl/cloud_io.hpp"
#include "dpl/config.hpp"
#include "dpl/error.hpp"
#include "dpl/geometry.hpp"
#include "dpl/loss.hpp"
#include "dpl/metrics.hpp"
#include "dpl/pipeline.hpp"
#include "dpl/scenario.hpp"
#include "dpl/uncertainty.hpp"
#include "dpl/version.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitPipeline = 4;

int exit_code_for(dpl::ErrorCode code) {
  switch (code) {
    case dpl::ErrorCode::ConfigError:
    case dpl::ErrorCode::InvalidArgument:
      return kExitConfig;
    case dpl::ErrorCode::IoError:
    case dpl::ErrorCode::ParseError:
    case dpl::ErrorCode::MissingRecord:
      return kExitIo;
    default:
      return kExitPipeline;
  }
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --out wins, then DPL_OUT_DIR, then the fallback.
fs::path output_dir(const std::string& flag, const char* fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("DPL_OUT_DIR"); env && *env) return env;
  return fallback;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw dpl::Error(dpl::ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dpl::Error(dpl::ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  if (!out) throw dpl::Error(dpl::ErrorCode::IoError, "write failed: " + path.string());
}

dpl::RunConfig config_from(const std::string& path) {
  if (path.empty()) return dpl::parse_run_config(dpl::default_config_json());
  if (!fs::exists(path)) throw dpl::Error(dpl::ErrorCode::ConfigError, "config not found: " + path);
  return dpl::load_run_config(path);
}

std::string absolute_string(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string variant;
};

dpl::RunConfig resolved_config(const CommonOptions& opt) {
  dpl::RunConfig cfg = config_from(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.threads) cfg.threads = *opt.threads;
  if (!opt.variant.empty()) {
    try {
      cfg.pipeline.variant = dpl::parse_variant(opt.variant);
    } catch (const dpl::Error& e) {
      throw dpl::Error(dpl::ErrorCode::ConfigError, "--variant: " + e.message());
    }
  }
  return cfg;
}

void cmd_gen_scenario(const CommonOptions& opt) {
  const auto cfg = resolved_config(opt);
  const fs::path dir = output_dir(opt.out, "scenario");
  ensure_dir(dir);
  const auto generated = dpl::generate_scenario(cfg.city, cfg.trajectory, cfg.seed);
  for (const auto& w : generated.warnings) std::cerr << "warning: " << w << "\n";
  dpl::write_scenario(dir, generated, cfg.city, cfg.trajectory);
  std::cout << "map points: " << generated.map.points.size() << "\n"
            << "timesteps: " << generated.scenario.steps.size() << "\n"
            << "written to " << dir.string() << "\n";
}

void cmd_run(const CommonOptions& opt, const std::string& scenario_path) {
  const auto cfg = resolved_config(opt);
  if (!fs::exists(scenario_path)) throw dpl::Error(dpl::ErrorCode::IoError, "scenario not found: " + scenario_path);
  const auto scenario = dpl::load_scenario(scenario_path);
  if (!fs::exists(scenario.map_path)) {
    throw dpl::Error(dpl::ErrorCode::IoError, "map not found: " + scenario.map_path.string());
  }
  const fs::path dir = output_dir(opt.out, "run");
  ensure_dir(dir);

  nlohmann::json manifest;
  manifest["schema"] = "dpl-manifest/1";
  manifest["status"] = "incomplete";
  manifest["tool_version"] = dpl::kVersion;
  manifest["config_path"] = opt.config.empty() ? "<default>" : absolute_string(opt.config);
  manifest["inputs"] = {{"scenario", absolute_string(scenario_path)}, {"map", absolute_string(scenario.map_path)}};
  manifest["output_dir"] = absolute_string(dir);
  manifest["seed"] = cfg.seed;
  manifest["threads"] = cfg.threads;
  manifest["variant"] = dpl::to_string(cfg.pipeline.variant);
  manifest["started_at"] = utc_now();
  manifest["finished_at"] = nullptr;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  auto map = std::make_shared<const dpl::PointCloud>(dpl::load_cloud(scenario.map_path));
  const dpl::Pipeline pipeline = dpl::make_pipeline(cfg, map);
  const auto result = dpl::run_sequence(pipeline, scenario.steps, cfg.threads);
  const auto artifacts = dpl::render_artifacts(result, scenario.steps, cfg.pipeline.limits, cfg.diagram_bins);
  write_file(dir / "records.csv", artifacts.records_csv);
  write_file(dir / "timesteps.csv", artifacts.timesteps_csv);
  write_file(dir / "report.json", artifacts.report_json);
  write_file(dir / "diagram.json", artifacts.diagram_json);

  std::size_t failed = 0;
  for (const auto& s : result.steps) failed += s.ok ? 0 : 1;
  manifest["status"] = "complete";
  manifest["finished_at"] = utc_now();
  manifest["timesteps"] = scenario.steps.size();
  manifest["failed_timesteps"] = failed;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "timesteps: " << scenario.steps.size() << " (" << failed << " failed)\n";
  for (int d = 0; d < 3; ++d) {
    const auto& r = result.report.directions[d];
    std::cout << dpl::kDirectionNames[d] << ": FR " << r.failure_rate << ", FAR " << r.false_alarm_rate << ", BG "
              << (r.bound_gap ? std::to_string(*r.bound_gap) : std::string("n/a")) << "\n";
  }
  if (!scenario.steps.empty() && failed == scenario.steps.size()) {
    throw dpl::Error(dpl::ErrorCode::TimestepFailure, "every timestep failed");
  }
}

std::vector<dpl::IntegrityRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dpl::Error(dpl::ErrorCode::IoError, "cannot open " + path);
  return dpl::read_records_csv(in);
}

void cmd_metrics(const CommonOptions& opt, const std::string& records_path) {
  const auto cfg = resolved_config(opt);
  const auto records = load_records(records_path);
  const fs::path dir = output_dir(opt.out, ".");
  ensure_dir(dir);
  const auto report = dpl::evaluate_integrity(records, cfg.pipeline.limits);
  write_file(dir / "report.json", dpl::report_to_json(report, cfg.pipeline.limits));
  std::cout << "records: " << records.size() << "\n";
}

void cmd_diagram(const CommonOptions& opt, const std::string& records_path, std::optional<std::size_t> bins) {
  const auto cfg = resolved_config(opt);
  const auto records = load_records(records_path);
  const fs::path dir = output_dir(opt.out, ".");
  ensure_dir(dir);
  const std::size_t n_bins = bins.value_or(cfg.diagram_bins);
  if (n_bins < 2) throw dpl::Error(dpl::ErrorCode::ConfigError, "--bins must be at least 2");
  write_file(dir / "diagram.json",
             dpl::diagram_to_json(dpl::integrity_diagram(records, cfg.pipeline.limits, n_bins)));
}

void cmd_calibrate(const CommonOptions& opt, const std::string& input) {
  const auto cfg = resolved_config(opt);
  std::ifstream in(input);
  if (!in) throw dpl::Error(dpl::ErrorCode::IoError, "cannot open " + input);
  const auto rows = dpl::read_calibration_csv(in);
  const fs::path dir = output_dir(opt.out, ".");
  ensure_dir(dir);
  const auto stats = dpl::calibrate(rows, cfg.loss);
  write_file(dir / "calibration.json", dpl::calibration_to_json(stats, cfg.loss));
  std::ostringstream residuals;
  dpl::write_rotation_residuals(residuals, stats.residuals);
  write_file(dir / "rotation_residuals.jsonl", residuals.str());
  std::cout << "rows: " << stats.rows << "\n";
}

void cmd_local_map(const std::string& map_path, const std::vector<double>& pose, const std::vector<double>& intr,
                   const std::string& out_path, bool ceil_rounding) {
  const auto map = dpl::load_cloud(map_path);
  // Vehicle pose in the map; the local map wants the map-to-vehicle transform.
  const dpl::Pose vehicle(dpl::Vec3(pose[0], pose[1], pose[2]),
                          dpl::Quat(pose[3], pose[4], pose[5], pose[6]).normalized());
  const auto camera = dpl::CameraIntrinsics::pinhole(intr[0], intr[1], intr[2], intr[3], static_cast<int>(intr[4]),
                                                     static_cast<int>(intr[5]));
  dpl::LocalMapParams params;
  if (ceil_rounding) params.rounding = dpl::PixelRounding::Ceil;
  const auto depth = dpl::build_local_map(dpl::inverse(vehicle), map, camera, params);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw dpl::Error(dpl::ErrorCode::IoError, "cannot write " + out_path);
  if (fs::path(out_path).extension() == ".csv") {
    dpl::write_depth_csv(out, depth);
  } else {
    dpl::write_depth_binary(out, depth);
  }
  std::cout << "populated pixels: " << depth.populated() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Protection levels for map-based localization"};
  app.set_version_flag("--version", dpl::kVersion);
  app.require_subcommand(1);

  CommonOptions opt;
  auto add_common = [&opt](CLI::App* sub, bool pipeline_flags) {
    sub->add_option("--config", opt.config, "JSON run configuration (schema dpl-config/1)");
    sub->add_option("--out", opt.out, "Output directory (else $DPL_OUT_DIR)");
    sub->add_option("--seed", opt.seed, "Master seed, overrides the config");
    if (pipeline_flags) {
      sub->add_option("--threads", opt.threads, "Worker threads, 0 = all cores");
      sub->add_option("--variant", opt.variant, "VAR, VAR_E, VAR_EO or VAR_EO_DIRECTIONAL");
    }
  };

  auto* gen = app.add_subcommand("gen-scenario", "Write a synthetic city map and trajectory");
  add_common(gen, false);

  std::string scenario_path;
  auto* run = app.add_subcommand("run", "Compute protection levels over a scenario");
  add_common(run, true);
  run->add_option("--scenario", scenario_path, "scenario.json written by gen-scenario")->required();

  std::string records_path;
  auto* metrics = app.add_subcommand("metrics", "Integrity report from a records CSV");
  add_common(metrics, false);
  metrics->add_option("--records", records_path, "records.csv")->required();

  std::optional<std::size_t> bins;
  auto* diagram = app.add_subcommand("diagram", "Integrity diagram data from a records CSV");
  add_common(diagram, false);
  diagram->add_option("--records", records_path, "records.csv")->required();
  diagram->add_option("--bins", bins, "Histogram bins over [0, 2 AL]");

  std::string calib_input;
  auto* calibrate = app.add_subcommand("calibrate", "Loss statistics and rotation residuals");
  add_common(calibrate, false);
  calibrate->add_option("--input", calib_input, "CSV of predictions and ground truth")->required();

  std::string map_path, depth_out;
  std::vector<double> pose, intrinsics;
  bool ceil_rounding = false;
  auto* local = app.add_subcommand("local-map", "Depth image of the map seen from a pose");
  local->add_option("--map", map_path, "Point cloud (.bin or .xyz)")->required();
  local->add_option("--pose", pose, "Vehicle pose in the map: x y z qw qx qy qz")->required()->expected(7);
  local->add_option("--intrinsics", intrinsics, "fx fy cx cy width height")->required()->expected(6);
  local->add_option("--out", depth_out, "Output depth map (.bin or .csv)")->required();
  local->add_flag("--ceil", ceil_rounding, "Round pixel coordinates up");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) cmd_gen_scenario(opt);
    if (*run) cmd_run(opt, scenario_path);
    if (*metrics) cmd_metrics(opt, records_path);
    if (*diagram) cmd_diagram(opt, records_path, bins);
    if (*calibrate) cmd_calibrate(opt, calib_input);
    if (*local) cmd_local_map(map_path, pose, intrinsics, depth_out, ceil_rounding);
  } catch (const dpl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPipeline;
  }
  return 0;
}
