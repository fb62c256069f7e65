#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include "dpl/geometry.hpp"
#include "dpl/pipeline.hpp"

namespace dpl {

// Grid of box-shaped buildings separated by streets. Every vertical wall is
// covered by a regular lattice of points at `point_density` points per m^2.
struct CityConfig {
  int blocks_x = 3;
  int blocks_y = 2;
  double block_size = 40.0;    // meters, square footprint
  double street_width = 12.0;  // meters
  double wall_height = 8.0;    // meters
  double point_density = 2.0;  // points per m^2

  void validate() const;
};

// Lattice dimensions of one wall face (points along the wall, points up).
std::pair<std::size_t, std::size_t> wall_lattice(const CityConfig& cfg);

PointCloud generate_city(const CityConfig& cfg);

// The vehicle drives along the street south of the first block row, heading
// +x in the world, looping over the city length. Estimates are perturbed
// from the truth by a uniformly oriented translation of length <= 
// max_translation_error and a rotation of angle <= max_rotation_error.
struct TrajectoryConfig {
  std::size_t timesteps = 200;
  double dt = 0.1;                  // seconds
  double speed = 10.0;              // m/s
  double sensor_height = 1.5;       // meters
  double max_translation_error = 2.0;
  double max_rotation_error = 10.0 * std::numbers::pi / 180.0;

  void validate() const;
};

std::vector<ScenarioStep> generate_trajectory(const CityConfig& city, const TrajectoryConfig& traj,
                                              std::uint64_t seed);

struct Scenario {
  std::uint64_t seed = 0;
  std::filesystem::path map_path;  // absolute after load
  std::vector<ScenarioStep> steps;
};

struct GeneratedScenario {
  PointCloud map;
  Scenario scenario;
  std::vector<std::string> warnings;
};

GeneratedScenario generate_scenario(const CityConfig& city, const TrajectoryConfig& traj, std::uint64_t seed);

// Writes <dir>/map.bin, <dir>/trajectory.csv and <dir>/scenario.json.
void write_scenario(const std::filesystem::path& dir, const GeneratedScenario& generated,
                    const CityConfig& city, const TrajectoryConfig& traj);

Scenario load_scenario(const std::filesystem::path& scenario_json);

void write_trajectory_csv(std::ostream& out, const std::vector<ScenarioStep>& steps);
std::vector<ScenarioStep> read_trajectory_csv(std::istream& in);

}  // namespace dpl
