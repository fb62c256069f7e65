#include "dpl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <unordered_map>

#include "dpl/error.hpp"

namespace dpl {

Quat canonical(const Quat& q) {
  const double n = q.norm();
  if (!std::isfinite(n) || n == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "quaternion must be finite and non-zero");
  }
  Quat out(q.coeffs() / n);
  if (out.w() < 0.0) out.coeffs() = -out.coeffs();
  return out;
}

Quat quat_wxyz(double w, double x, double y, double z) { return canonical(Quat(w, x, y, z)); }

Quat quat_from_rotation_vector(const Vec3& rv) {
  const double angle = rv.norm();
  if (angle == 0.0) return Quat::Identity();
  return canonical(Quat(Eigen::AngleAxisd(angle, rv / angle)));
}

Quat quat_from_yaw_pitch_roll(double yaw, double pitch, double roll) {
  const Quat q = Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                 Eigen::AngleAxisd(roll, Vec3::UnitX());
  return canonical(q);
}

Pose inverse(const Pose& pose) {
  const Quat inv = pose.orientation().conjugate();
  return Pose(-(inv * pose.position()), inv);
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

bool PointCloud::all_finite() const {
  return std::all_of(points.begin(), points.end(), [](const Vec3& p) { return p.allFinite(); });
}

void CameraIntrinsics::validate() const {
  if (!(projection(0, 0) > 0.0) || !(projection(1, 1) > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "camera focal terms must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  }
}

CameraIntrinsics CameraIntrinsics::pinhole(double fx, double fy, double cx, double cy, int width,
                                           int height) {
  CameraIntrinsics intr;
  intr.projection << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  intr.width = width;
  intr.height = height;
  intr.validate();
  return intr;
}

DepthMap::DepthMap(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::InvalidArgument, "depth map size must be non-negative");
  }
  depth_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), kEmpty);
}

void DepthMap::offer(int col, int row, double depth) {
  double& cell = depth_[index(col, row)];
  if (cell == kEmpty || depth < cell) cell = depth;
}

std::size_t DepthMap::populated() const {
  return static_cast<std::size_t>(
      std::count_if(depth_.begin(), depth_.end(), [](double d) { return d > 0.0; }));
}

RigidTransform pose_to_transform(const Pose& pose) {
  RigidTransform t;
  t.rotation = pose.rotation();
  t.translation = pose.position();
  return t;
}

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back(t.apply(p));
  return out;
}

namespace {

bool inside(const Vec3& p, const CropExtent& e) {
  return p.y() >= e.near && p.y() <= e.forward && std::abs(p.x()) <= e.lateral &&
         std::abs(p.z()) <= e.vertical;
}

}  // namespace

PointCloud crop_cloud(const PointCloud& cloud, const Pose& pose, const CropExtent& extent) {
  if (!(extent.forward > 0.0 && extent.lateral > 0.0 && extent.vertical > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "crop extents must be positive");
  }
  const RigidTransform t = pose_to_transform(pose);
  PointCloud out;
  for (const Vec3& p : cloud.points) {
    if (inside(t.apply(p), extent)) out.points.push_back(p);
  }
  return out;
}

PointCloud vehicle_to_camera(const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.emplace_back(p.x(), -p.z(), p.y());
  return out;
}

namespace {

void require_positive_depth(const PointCloud& cloud) {
  for (const Vec3& p : cloud.points) {
    if (!(p.z() > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "occlusion filter requires positive depth");
    }
  }
}

// Angle at p_j between the ray towards the camera center and the segment to p_i.
bool occludes(const Vec3& near, const Vec3& far, double threshold) {
  const Vec3 to_camera = -far;
  const Vec3 to_near = near - far;
  const double angle = std::atan2(to_camera.cross(to_near).norm(), to_camera.dot(to_near));
  return angle < threshold;
}

PointCloud keep_unmarked(const PointCloud& cloud, const std::vector<char>& occluded) {
  PointCloud out;
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    if (!occluded[k]) out.points.push_back(cloud.points[k]);
  }
  return out;
}

}  // namespace

PointCloud occlusion_filter(const PointCloud& camera_points, double threshold) {
  require_positive_depth(camera_points);
  const std::size_t n = camera_points.size();
  std::vector<double> range(n);
  for (std::size_t k = 0; k < n; ++k) range[k] = camera_points.points[k].norm();

  std::vector<char> occluded(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (range[i] < range[j] &&
          occludes(camera_points.points[i], camera_points.points[j], threshold)) {
        occluded[j] = 1;
        break;
      }
    }
  }
  return keep_unmarked(camera_points, occluded);
}

PointCloud occlusion_filter(const PointCloud& camera_points, const CameraIntrinsics& intr,
                            const OcclusionParams& params) {
  intr.validate();
  require_positive_depth(camera_points);
  if (!(params.pixel_radius > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "occlusion pixel radius must be positive");
  }
  const std::size_t n = camera_points.size();
  const double cell = std::max(params.pixel_radius, 1.0);

  std::vector<Eigen::Vector2d> pixel(n);
  std::vector<double> range(n);
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  auto key = [](std::int64_t cu, std::int64_t cv) {
    return (static_cast<std::uint64_t>(cu) << 32) ^ static_cast<std::uint64_t>(cv & 0xffffffff);
  };
  auto cell_of = [cell](double x) { return static_cast<std::int64_t>(std::floor(x / cell)); };

  for (std::size_t k = 0; k < n; ++k) {
    const Vec3& p = camera_points.points[k];
    const Vec3 h = intr.projection * p;
    pixel[k] = Eigen::Vector2d(h.x() / h.z(), h.y() / h.z());
    range[k] = p.norm();
    buckets[key(cell_of(pixel[k].x()), cell_of(pixel[k].y()))].push_back(k);
  }

  const double r2 = params.pixel_radius * params.pixel_radius;
  std::vector<char> occluded(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::int64_t cu = cell_of(pixel[j].x());
    const std::int64_t cv = cell_of(pixel[j].y());
    bool done = false;
    for (std::int64_t du = -1; du <= 1 && !done; ++du) {
      for (std::int64_t dv = -1; dv <= 1 && !done; ++dv) {
        auto it = buckets.find(key(cu + du, cv + dv));
        if (it == buckets.end()) continue;
        for (std::size_t i : it->second) {
          if (range[i] < range[j] && (pixel[i] - pixel[j]).squaredNorm() <= r2 &&
              occludes(camera_points.points[i], camera_points.points[j], params.threshold)) {
            occluded[j] = 1;
            done = true;
            break;
          }
        }
      }
    }
  }
  return keep_unmarked(camera_points, occluded);
}

DepthMap project_to_depth_map(const PointCloud& camera_points, const CameraIntrinsics& intr,
                              PixelRounding rounding) {
  intr.validate();
  DepthMap map(intr.width, intr.height);
  for (const Vec3& p : camera_points.points) {
    if (!(p.z() > 0.0)) continue;
    const Vec3 h = intr.projection * p;
    const double u = h.x() / h.z();
    const double v = h.y() / h.z();
    const double cu = rounding == PixelRounding::Floor ? std::floor(u) : std::ceil(u);
    const double cv = rounding == PixelRounding::Floor ? std::floor(v) : std::ceil(v);
    if (cu < 0.0 || cv < 0.0 || cu >= intr.width || cv >= intr.height) continue;
    map.offer(static_cast<int>(cu), static_cast<int>(cv), p.z());
  }
  return map;
}

DepthMap build_local_map(const Pose& pose, const PointCloud& map, const CameraIntrinsics& intr,
                         const LocalMapParams& params) {
  if (!(params.crop.near > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "local map near clip must be positive");
  }
  const PointCloud in_frame = transform_cloud(map, pose_to_transform(pose));
  const PointCloud cropped = crop_cloud(in_frame, Pose::identity(), params.crop);
  const PointCloud camera = vehicle_to_camera(cropped);
  const PointCloud visible = occlusion_filter(camera, intr, params.occlusion);
  return project_to_depth_map(visible, intr, params.rounding);
}

namespace {

using VoxelKey = std::tuple<std::int64_t, std::int64_t, std::int64_t>;

VoxelKey voxel_of(const Vec3& p, double size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / size)),
          static_cast<std::int64_t>(std::floor(p.y() / size)),
          static_cast<std::int64_t>(std::floor(p.z() / size))};
}

std::vector<std::size_t> neighbor_counts(const PointCloud& cloud, double radius) {
  std::map<VoxelKey, std::vector<std::size_t>> grid;
  for (std::size_t k = 0; k < cloud.size(); ++k) grid[voxel_of(cloud.points[k], radius)].push_back(k);

  const double r2 = radius * radius;
  std::vector<std::size_t> counts(cloud.size(), 0);
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const auto [x, y, z] = voxel_of(cloud.points[k], radius);
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = grid.find({x + dx, y + dy, z + dz});
          if (it == grid.end()) continue;
          for (std::size_t other : it->second) {
            if (other != k && (cloud.points[other] - cloud.points[k]).squaredNorm() <= r2) {
              ++counts[k];
            }
          }
        }
  }
  return counts;
}

}  // namespace

PointCloud clean_map(const PointCloud& cloud, const MapCleaningParams& params) {
  if (!(params.neighborhood_radius > 0.0) || !(params.voxel_size > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "radius and voxel size must be positive");
  }
  if (!cloud.all_finite()) {
    throw Error(ErrorCode::InvalidArgument, "point cloud contains non-finite coordinates");
  }

  // Sparse-outlier score: one-sided Z-score of the neighbor count, so points
  // in thinner neighborhoods than the population score high.
  const std::vector<std::size_t> counts = neighbor_counts(cloud, params.neighborhood_radius);
  const double n = static_cast<double>(counts.size());
  double mean = 0.0;
  for (std::size_t c : counts) mean += static_cast<double>(c);
  mean = n > 0 ? mean / n : 0.0;
  double var = 0.0;
  for (std::size_t c : counts) var += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
  const double stddev = n > 0 ? std::sqrt(var / n) : 0.0;

  std::map<VoxelKey, std::pair<Vec3, std::size_t>> voxels;
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    if (stddev > 0.0) {
      const double z = (mean - static_cast<double>(counts[k])) / stddev;
      if (z > params.zscore_cutoff) continue;
    }
    auto& [sum, members] = voxels[voxel_of(cloud.points[k], params.voxel_size)];
    if (members == 0) sum = Vec3::Zero();
    sum += cloud.points[k];
    ++members;
  }

  PointCloud out;
  out.points.reserve(voxels.size());
  for (const auto& [key, acc] : voxels) out.points.push_back(acc.first / static_cast<double>(acc.second));
  return out;
}

double quaternion_angular_distance(const Quat& q1, const Quat& q2) {
  const Quat d = q1 * q2.inverse();
  return std::atan2(d.vec().norm(), std::abs(d.w()));
}

}  // namespace dpl
