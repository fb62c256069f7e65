#include "dpl/cloud_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "dpl/error.hpp"

namespace dpl {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t k = 0; k < sizeof(T); ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw Error(ErrorCode::ParseError, "unexpected end of binary stream");
  }
  U bits = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) bits |= static_cast<U>(bytes[k]) << (8 * k);
  return std::bit_cast<T>(bits);
}

bool is_ascii_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".xyz" || ext == ".txt";
}

}  // namespace

PointCloud read_xyz(std::istream& in) {
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    double x, y, z;
    if (!(fields >> x >> y >> z)) {
      throw Error(ErrorCode::ParseError, "xyz line " + std::to_string(line_no) + ": expected three numbers");
    }
    const Vec3 p(x, y, z);
    if (!p.allFinite()) {
      throw Error(ErrorCode::ParseError, "xyz line " + std::to_string(line_no) + ": non-finite coordinate");
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

void write_xyz(std::ostream& out, const PointCloud& cloud) {
  out << std::setprecision(17);
  for (const Vec3& p : cloud.points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

PointCloud read_cloud_binary(std::istream& in) {
  const auto count = get_le<std::uint64_t>(in);
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t k = 0; k < count; ++k) {
    const double x = get_le<double>(in);
    const double y = get_le<double>(in);
    const double z = get_le<double>(in);
    cloud.points.emplace_back(x, y, z);
  }
  if (!cloud.all_finite()) throw Error(ErrorCode::ParseError, "binary cloud contains non-finite values");
  return cloud;
}

void write_cloud_binary(std::ostream& out, const PointCloud& cloud) {
  put_le<std::uint64_t>(out, cloud.size());
  for (const Vec3& p : cloud.points) {
    put_le(out, p.x());
    put_le(out, p.y());
    put_le(out, p.z());
  }
}

PointCloud load_cloud(const std::filesystem::path& path) {
  std::ifstream in(path, is_ascii_path(path) ? std::ios::in : std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return is_ascii_path(path) ? read_xyz(in) : read_cloud_binary(in);
}

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, is_ascii_path(path) ? std::ios::out : std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (is_ascii_path(path)) {
    write_xyz(out, cloud);
  } else {
    write_cloud_binary(out, cloud);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void write_depth_csv(std::ostream& out, const DepthMap& map) {
  out << std::setprecision(9);
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      if (col > 0) out << ',';
      out << map.at(col, row);
    }
    out << '\n';
  }
}

void write_depth_binary(std::ostream& out, const DepthMap& map) {
  out.write("DMAP", 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(map.width()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(map.height()));
  put_le<float>(out, static_cast<float>(DepthMap::kEmpty));
  for (double d : map.values()) put_le<float>(out, static_cast<float>(d));
}

DepthMap read_depth_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "DMAP", 4) != 0) {
    throw Error(ErrorCode::ParseError, "missing DMAP magic");
  }
  const auto width = get_le<std::uint32_t>(in);
  const auto height = get_le<std::uint32_t>(in);
  const float sentinel = get_le<float>(in);
  DepthMap map(static_cast<int>(width), static_cast<int>(height));
  for (std::uint32_t row = 0; row < height; ++row) {
    for (std::uint32_t col = 0; col < width; ++col) {
      const float d = get_le<float>(in);
      if (d != sentinel) map.offer(static_cast<int>(col), static_cast<int>(row), d);
    }
  }
  return map;
}

}  // namespace dpl
