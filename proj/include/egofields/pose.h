#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace egofields {

// Rigid transform mapping WORLD coordinates to CAMERA coordinates:
//
//   X_cam = R * X_world + t
//
// This is the COLMAP images.txt convention. The camera center in world
// coordinates is -R^T t, not t.
//
// The stored quaternion is unit norm with qw >= 0.
class RigidPose {
 public:
  RigidPose() = default;
  // Accepts quaternions whose norm is within 1e-6 of 1 and renormalizes them;
  // anything further off throws InvalidArgument.
  RigidPose(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation);
  // Renormalizes any nonzero quaternion.
  static RigidPose from_unnormalized(const Eigen::Quaterniond& rotation,
                                     const Eigen::Vector3d& translation);
  // Camera-to-world rotation and camera center.
  static RigidPose from_camera_center(const Eigen::Matrix3d& world_from_camera,
                                      const Eigen::Vector3d& center);

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix3d rotation_matrix() const { return rotation_.toRotationMatrix(); }
  Eigen::Vector3d center() const;

  Eigen::Vector3d apply(const Eigen::Vector3d& world) const;
  RigidPose inverse() const;
  // (a * b).apply(x) == a.apply(b.apply(x))
  friend RigidPose operator*(const RigidPose& a, const RigidPose& b);

 private:
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

// Flips sign so that qw >= 0 (ties broken on the first nonzero of x, y, z).
Eigen::Quaterniond canonical_quaternion(const Eigen::Quaterniond& q);

}  // namespace egofields
