#include "dpl/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "dpl/cloud_io.hpp"
#include "dpl/error.hpp"
#include "dpl/rng.hpp"

namespace dpl {

namespace {

constexpr const char* kTrajectoryHeader =
    "t,key,true_x,true_y,true_z,true_qw,true_qx,true_qy,true_qz,est_x,est_y,est_z,est_qw,est_qx,est_qy,est_qz";

std::string step_key(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "t%06zu", index);
  return buf;
}

}  // namespace

void CityConfig::validate() const {
  if (blocks_x < 0 || blocks_y < 0) throw Error(ErrorCode::InvalidArgument, "block counts must be non-negative");
  if (!(block_size > 0.0 && street_width > 0.0 && wall_height > 0.0 && point_density > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "city dimensions and density must be positive");
  }
}

void TrajectoryConfig::validate() const {
  if (!(dt > 0.0 && speed >= 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive, speed non-negative");
  if (!(max_translation_error >= 0.0 && max_rotation_error >= 0.0 && max_rotation_error < std::numbers::pi)) {
    throw Error(ErrorCode::InvalidArgument, "estimate perturbation bounds out of range");
  }
}

std::pair<std::size_t, std::size_t> wall_lattice(const CityConfig& cfg) {
  const double per_meter = std::sqrt(cfg.point_density);
  return {static_cast<std::size_t>(std::llround(cfg.block_size * per_meter)),
          static_cast<std::size_t>(std::llround(cfg.wall_height * per_meter))};
}

PointCloud generate_city(const CityConfig& cfg) {
  cfg.validate();
  const auto [along, up] = wall_lattice(cfg);
  const double pitch = cfg.block_size + cfg.street_width;
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(cfg.blocks_x * cfg.blocks_y) * 4 * along * up);

  for (int bx = 0; bx < cfg.blocks_x; ++bx) {
    for (int by = 0; by < cfg.blocks_y; ++by) {
      const double x0 = bx * pitch;
      const double y0 = by * pitch;
      const double x1 = x0 + cfg.block_size;
      const double y1 = y0 + cfg.block_size;
      for (std::size_t i = 0; i < along; ++i) {
        const double s = (static_cast<double>(i) + 0.5) * cfg.block_size / static_cast<double>(along);
        for (std::size_t k = 0; k < up; ++k) {
          const double z = (static_cast<double>(k) + 0.5) * cfg.wall_height / static_cast<double>(up);
          cloud.points.emplace_back(x0 + s, y0, z);  // south face
          cloud.points.emplace_back(x0 + s, y1, z);  // north face
          cloud.points.emplace_back(x0, y0 + s, z);  // west face
          cloud.points.emplace_back(x1, y0 + s, z);  // east face
        }
      }
    }
  }
  return cloud;
}

std::vector<ScenarioStep> generate_trajectory(const CityConfig& city, const TrajectoryConfig& traj,
                                              std::uint64_t seed) {
  city.validate();
  traj.validate();
  const double pitch = city.block_size + city.street_width;
  const double loop = city.blocks_x > 0 ? city.blocks_x * pitch : 0.0;
  const double street_y = -0.5 * city.street_width;
  // Vehicle +y (forward) maps to world +x.
  const Quat heading = quat_from_yaw_pitch_roll(-0.5 * std::numbers::pi, 0.0, 0.0);

  std::vector<ScenarioStep> steps;
  steps.reserve(traj.timesteps);
  for (std::size_t k = 0; k < traj.timesteps; ++k) {
    const double t = static_cast<double>(k) * traj.dt;
    double x = traj.speed * t;
    if (loop > 0.0) x = std::fmod(x, loop);
    const Pose truth(Vec3(x, street_y, traj.sensor_height), heading);

    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(Stream::Scenario), k}));
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    if (dir.norm() == 0.0) dir = Vec3::UnitX();
    const Vec3 offset = dir.normalized() * rng.uniform(0.0, traj.max_translation_error);
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    if (axis.norm() == 0.0) axis = Vec3::UnitZ();
    const double angle = rng.uniform(0.0, traj.max_rotation_error);
    const Quat rot = quat_from_rotation_vector(axis.normalized() * angle);
    const Pose estimate(truth.position() + offset, truth.orientation() * rot);

    steps.push_back(ScenarioStep{t, step_key(k), truth, estimate});
  }
  return steps;
}

GeneratedScenario generate_scenario(const CityConfig& city, const TrajectoryConfig& traj, std::uint64_t seed) {
  GeneratedScenario out;
  out.map = generate_city(city);
  if (out.map.empty()) {
    out.warnings.push_back("city has no blocks; the map is empty");
  }
  out.scenario.seed = seed;
  out.scenario.steps = generate_trajectory(city, traj, seed);
  return out;
}

void write_trajectory_csv(std::ostream& out, const std::vector<ScenarioStep>& steps) {
  out << kTrajectoryHeader << '\n' << std::setprecision(17);
  auto pose_fields = [&out](const Pose& p) {
    const Quat& q = p.orientation();
    out << ',' << p.position().x() << ',' << p.position().y() << ',' << p.position().z() << ',' << q.w() << ','
        << q.x() << ',' << q.y() << ',' << q.z();
  };
  for (const auto& s : steps) {
    out << s.timestamp << ',' << s.key;
    pose_fields(s.true_pose);
    pose_fields(s.estimate);
    out << '\n';
  }
}

std::vector<ScenarioStep> read_trajectory_csv(std::istream& in) {
  std::vector<ScenarioStep> steps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kTrajectoryHeader) throw Error(ErrorCode::ParseError, "trajectory line 1: unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (cells.size() != 16) {
      throw Error(ErrorCode::ParseError, "trajectory line " + std::to_string(line_no) + ": expected 16 fields");
    }
    try {
      std::vector<double> v;
      for (std::size_t k = 0; k < cells.size(); ++k) v.push_back(k == 1 ? 0.0 : std::stod(cells[k]));
      ScenarioStep s;
      s.timestamp = v[0];
      s.key = cells[1];
      s.true_pose = Pose(Vec3(v[2], v[3], v[4]), Quat(v[5], v[6], v[7], v[8]));
      s.estimate = Pose(Vec3(v[9], v[10], v[11]), Quat(v[12], v[13], v[14], v[15]));
      steps.push_back(s);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ParseError, "trajectory line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return steps;
}

void write_scenario(const std::filesystem::path& dir, const GeneratedScenario& generated, const CityConfig& city,
                    const TrajectoryConfig& traj) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  save_cloud(dir / "map.bin", generated.map);
  {
    std::ofstream out(dir / "trajectory.csv");
    if (!out) throw Error(ErrorCode::IoError, "cannot write trajectory.csv");
    write_trajectory_csv(out, generated.scenario.steps);
  }
  nlohmann::json j;
  j["schema"] = "dpl-scenario/1";
  j["seed"] = generated.scenario.seed;
  j["map"] = "map.bin";
  j["trajectory"] = "trajectory.csv";
  j["map_points"] = generated.map.size();
  j["timesteps"] = generated.scenario.steps.size();
  j["city"] = {{"blocks_x", city.blocks_x},       {"blocks_y", city.blocks_y},
               {"block_size", city.block_size},   {"street_width", city.street_width},
               {"wall_height", city.wall_height}, {"point_density", city.point_density}};
  j["trajectory_config"] = {{"timesteps", traj.timesteps},
                            {"dt", traj.dt},
                            {"speed", traj.speed},
                            {"sensor_height", traj.sensor_height},
                            {"max_translation_error", traj.max_translation_error},
                            {"max_rotation_error", traj.max_rotation_error}};
  j["warnings"] = generated.warnings;
  std::ofstream out(dir / "scenario.json");
  if (!out) throw Error(ErrorCode::IoError, "cannot write scenario.json");
  out << j.dump(2) << '\n';
}

Scenario load_scenario(const std::filesystem::path& scenario_json) {
  std::ifstream in(scenario_json);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + scenario_json.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, scenario_json.string() + ": " + e.what());
  }
  const auto base = scenario_json.parent_path();
  Scenario sc;
  try {
    if (j.at("schema").get<std::string>() != "dpl-scenario/1") {
      throw Error(ErrorCode::ParseError, "unsupported scenario schema");
    }
    sc.seed = j.at("seed").get<std::uint64_t>();
    sc.map_path = base / j.at("map").get<std::string>();
    const auto traj_path = base / j.at("trajectory").get<std::string>();
    std::ifstream tin(traj_path);
    if (!tin) throw Error(ErrorCode::IoError, "cannot open " + traj_path.string());
    sc.steps = read_trajectory_csv(tin);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, scenario_json.string() + ": " + e.what());
  }
  return sc;
}

}  // namespace dpl
