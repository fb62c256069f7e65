#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "dpl/cloud_io.hpp"
#include "dpl/error.hpp"
#include "dpl/rng.hpp"

using dpl::PointCloud;
using dpl::Vec3;

TEST_CASE("xyz round trip") {
  dpl::Rng rng(50);
  PointCloud c;
  for (int k = 0; k < 100; ++k) c.points.emplace_back(rng.normal(), rng.normal() * 1e5, rng.normal() * 1e-7);
  std::stringstream s;
  dpl::write_xyz(s, c);
  CHECK(dpl::read_xyz(s).points == c.points);

  std::stringstream comments("# header\n1 2 3\n\n  4 5 6\n");
  CHECK(dpl::read_xyz(comments).size() == 2);
  std::stringstream bad("1 2\n");
  CHECK_THROWS_AS(dpl::read_xyz(bad), dpl::Error);
}

TEST_CASE("binary cloud layout") {
  PointCloud c;
  c.points.emplace_back(1.0, -2.0, 0.5);
  c.points.emplace_back(3.25, 0.0, 1e-300);
  std::stringstream s;
  dpl::write_cloud_binary(s, c);
  const std::string bytes = s.str();
  REQUIRE(bytes.size() == 8 + 2 * 24);
  CHECK(static_cast<unsigned char>(bytes[0]) == 2);
  for (int k = 1; k < 8; ++k) CHECK(bytes[k] == 0);
  double first;
  std::memcpy(&first, bytes.data() + 8, 8);
  CHECK(first == 1.0);
  CHECK(dpl::read_cloud_binary(s).points == c.points);

  std::stringstream truncated(bytes.substr(0, 20));
  CHECK_THROWS_AS(dpl::read_cloud_binary(truncated), dpl::Error);
}

TEST_CASE("cloud files by extension") {
  const auto dir = std::filesystem::temp_directory_path() / "dpl_cloud_io_test";
  std::filesystem::create_directories(dir);
  PointCloud c;
  c.points.emplace_back(0.1, 0.2, 0.3);
  dpl::save_cloud(dir / "a.xyz", c);
  dpl::save_cloud(dir / "a.bin", c);
  CHECK(dpl::load_cloud(dir / "a.xyz").points == c.points);
  CHECK(dpl::load_cloud(dir / "a.bin").points == c.points);
  CHECK(std::filesystem::file_size(dir / "a.bin") == 32);
  CHECK_THROWS_AS(dpl::load_cloud(dir / "missing.bin"), dpl::Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("depth map files") {
  dpl::DepthMap m(3, 2);
  m.offer(0, 0, 5.0);
  m.offer(2, 1, 1.5);
  m.offer(2, 1, 2.5);
  std::stringstream bin;
  dpl::write_depth_binary(bin, m);
  const std::string bytes = bin.str();
  REQUIRE(bytes.size() == 16 + 6 * 4);
  CHECK(bytes.substr(0, 4) == "DMAP");
  float sentinel;
  std::memcpy(&sentinel, bytes.data() + 12, 4);
  CHECK(sentinel == -1.0f);
  CHECK(dpl::read_depth_binary(bin) == m);

  std::stringstream csv;
  dpl::write_depth_csv(csv, m);
  CHECK(csv.str() == "5,-1,-1\n-1,-1,1.5\n");

  std::stringstream junk("XXXX");
  CHECK_THROWS_AS(dpl::read_depth_binary(junk), dpl::Error);
}
