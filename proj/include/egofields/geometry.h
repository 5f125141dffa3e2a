#pragma once

#include <optional>
#include <span>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "egofields/camera.h"
#include "egofields/pose.h"
#include "egofields/reconstruction.h"

namespace egofields {

struct Projection {
  Eigen::Vector2d pixel;
  double depth;  // camera-frame z
};

// Projects a world point. Returns nullopt when the point is at or behind the
// camera plane (depth <= 0). A pixel outside the image is still returned;
// callers check CameraIntrinsics::in_frame().
std::optional<Projection> project(const Eigen::Vector3d& world, const RigidPose& pose,
                                  const CameraIntrinsics& intrinsics);

// World point at camera-frame depth `depth` along the ray through `pixel`.
// Throws InvalidArgument for depth <= 0 and UndistortionError when the
// distortion model cannot be inverted.
Eigen::Vector3d backproject(const Eigen::Vector2d& pixel, double depth, const RigidPose& pose,
                            const CameraIntrinsics& intrinsics);

// Unit ray direction in world coordinates through `pixel`.
Eigen::Vector3d pixel_ray(const Eigen::Vector2d& pixel, const RigidPose& pose,
                          const CameraIntrinsics& intrinsics);

// Chordal L2 mean: principal eigenvector of sum(q q^T). Result has qw >= 0.
// Throws InvalidArgument on empty input.
Eigen::Quaterniond mean_rotation(std::span<const Eigen::Quaterniond> quaternions);

// Intrinsic x-y-z Euler angles: R = Rx(pitch) * Ry(yaw) * Rz(roll).
struct EulerAngles {
  double pitch = 0.0;  // about camera x, radians
  double yaw = 0.0;    // about camera y
  double roll = 0.0;   // about camera z
};

// Decomposes reference^-1 * pose.rotation(). When |cos(yaw)| < 1e-6
// (gimbal lock) roll is set to 0 and the whole in-plane angle goes to pitch.
EulerAngles relative_orientation(const RigidPose& pose, const Eigen::Quaterniond& reference);
EulerAngles euler_from_rotation(const Eigen::Matrix3d& r);
Eigen::Matrix3d rotation_from_euler(const EulerAngles& angles);

struct ReprojectionStats {
  double mean = 0.0;         // recomputed from tracks
  double max = 0.0;
  double mean_stored = 0.0;  // mean of SparsePoint::error over points with tracks
  std::size_t observations = 0;
  std::size_t behind_camera = 0;  // observations skipped because depth <= 0
};

// Mean over every (point, observation) pair of |project(point) - observation|.
// Throws InvalidArgument when no point has a non-empty track.
ReprojectionStats reprojection_stats(const Reconstruction& recon);
double mean_reprojection_error(const Reconstruction& recon);

}  // namespace egofields
