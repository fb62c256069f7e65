#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstddef>
#include <vector>

namespace dpl {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Unit quaternion with non-negative scalar part. Throws InvalidArgument on a
// zero-norm or non-finite input.
Quat canonical(const Quat& q);

// Scalar-first construction helpers.
Quat quat_wxyz(double w, double x, double y, double z);

// Rotation vector (axis * angle, radians) to quaternion.
Quat quat_from_rotation_vector(const Vec3& rv);

// Intrinsic Z-Y-X composition: R = Rz(yaw) * Ry(pitch) * Rx(roll).
Quat quat_from_yaw_pitch_roll(double yaw, double pitch, double roll);

// Position plus orientation. The orientation is always canonical.
class Pose {
 public:
  Pose() = default;
  Pose(const Vec3& position, const Quat& orientation)
      : position_(position), orientation_(canonical(orientation)) {}

  const Vec3& position() const { return position_; }
  const Quat& orientation() const { return orientation_; }
  Mat3 rotation() const { return orientation_.toRotationMatrix(); }

  static Pose identity() { return Pose(); }

 private:
  Vec3 position_ = Vec3::Zero();
  Quat orientation_ = Quat::Identity();
};

// Pose of the inverse rigid motion: position -R^T x, orientation q^-1.
Pose inverse(const Pose& pose);

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;

  static RigidTransform identity() { return {}; }
};

// (a * b).apply(p) == a.apply(b.apply(p))
RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool all_finite() const;
};

struct CameraIntrinsics {
  Mat3 projection = Mat3::Identity();
  int width = 0;
  int height = 0;

  // Throws InvalidArgument when focal terms or image size are not positive.
  void validate() const;

  static CameraIntrinsics pinhole(double fx, double fy, double cx, double cy, int width,
                                  int height);
};

class DepthMap {
 public:
  static constexpr double kEmpty = -1.0;

  DepthMap() = default;
  DepthMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  bool has_depth(int col, int row) const { return at(col, row) > 0.0; }
  double at(int col, int row) const { return depth_[index(col, row)]; }

  // Keeps the smaller of the stored and offered depth.
  void offer(int col, int row, double depth);

  std::size_t populated() const;
  const std::vector<double>& values() const { return depth_; }

  bool operator==(const DepthMap&) const = default;

 private:
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> depth_;
};

enum class PixelRounding { Floor, Ceil };

// Box in the pose frame. The vehicle frame is x right (lateral), y forward
// (longitudinal), z up (vertical); the forward range is [near, forward].
struct CropExtent {
  double forward = 100.0;
  double lateral = 50.0;
  double vertical = 10.0;
  double near = 0.0;
};

struct OcclusionParams {
  double threshold = 0.02;  // radians
  double pixel_radius = 2.0;
};

struct LocalMapParams {
  CropExtent crop{100.0, 50.0, 10.0, 0.5};
  OcclusionParams occlusion;
  PixelRounding rounding = PixelRounding::Floor;
};

struct MapCleaningParams {
  double neighborhood_radius = 0.1;
  double zscore_cutoff = 3.0;
  double voxel_size = 0.1;
};

RigidTransform pose_to_transform(const Pose& pose);

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& t);

PointCloud crop_cloud(const PointCloud& cloud, const Pose& pose, const CropExtent& extent);

// Fixed sensor mounting: vehicle (x right, y forward, z up) to camera optical
// frame (x right, y down, z forward).
PointCloud vehicle_to_camera(const PointCloud& cloud);

// Exhaustive O(n^2) occlusion test over all pairs. A point p_j is removed when
// some strictly nearer point p_i makes an angle below `threshold` between the
// ray p_j -> camera center and the segment p_j -> p_i. Every input point acts
// as an occluder, so the filter is idempotent.
PointCloud occlusion_filter(const PointCloud& camera_points, double threshold);

// Same test restricted to pairs whose projections lie within
// params.pixel_radius pixels of each other.
PointCloud occlusion_filter(const PointCloud& camera_points, const CameraIntrinsics& intr,
                            const OcclusionParams& params);

// Z-buffered projection; the smallest depth wins on pixel collisions.
DepthMap project_to_depth_map(const PointCloud& camera_points, const CameraIntrinsics& intr,
                              PixelRounding rounding = PixelRounding::Floor);

// transform -> crop (identity pose, already in frame) -> camera mount ->
// occlusion filter -> projection.
DepthMap build_local_map(const Pose& pose, const PointCloud& map, const CameraIntrinsics& intr,
                         const LocalMapParams& params = {});

PointCloud clean_map(const PointCloud& cloud, const MapCleaningParams& params = {});

// atan2(|v|, |w|) of q1 * q2^-1: half the relative rotation angle.
double quaternion_angular_distance(const Quat& q1, const Quat& q2);

}  // namespace dpl
