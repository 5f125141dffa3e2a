#include "egofields/pose.h"

#include <cmath>

#include "egofields/error.h"

namespace egofields {

Eigen::Quaterniond canonical_quaternion(const Eigen::Quaterniond& q) {
  const double comps[4] = {q.w(), q.x(), q.y(), q.z()};
  for (double c : comps) {
    if (c > 0.0) return q;
    if (c < 0.0) return Eigen::Quaterniond(-q.w(), -q.x(), -q.y(), -q.z());
  }
  return q;
}

RigidPose::RigidPose(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation)
    : translation_(translation) {
  const double norm = rotation.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6) {
    throw InvalidArgument("pose quaternion is not unit norm (|q| = " + std::to_string(norm) +
                          ")");
  }
  if (!translation.allFinite()) throw InvalidArgument("pose translation is not finite");
  // Leave already-unit quaternions untouched so that file round trips are exact.
  rotation_ = canonical_quaternion(std::abs(norm - 1.0) > 1e-15 ? rotation.normalized() : rotation);
}

RigidPose RigidPose::from_unnormalized(const Eigen::Quaterniond& rotation,
                                       const Eigen::Vector3d& translation) {
  const double norm = rotation.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidArgument("zero quaternion");
  return RigidPose(rotation.normalized(), translation);
}

RigidPose RigidPose::from_camera_center(const Eigen::Matrix3d& world_from_camera,
                                        const Eigen::Vector3d& center) {
  const Eigen::Matrix3d r = world_from_camera.transpose();
  return from_unnormalized(Eigen::Quaterniond(r), -r * center);
}

Eigen::Vector3d RigidPose::center() const { return -(rotation_.conjugate() * translation_); }

Eigen::Vector3d RigidPose::apply(const Eigen::Vector3d& world) const {
  return rotation_ * world + translation_;
}

RigidPose RigidPose::inverse() const {
  const Eigen::Quaterniond inv = rotation_.conjugate();
  return RigidPose(inv, -(inv * translation_));
}

RigidPose operator*(const RigidPose& a, const RigidPose& b) {
  return RigidPose((a.rotation_ * b.rotation_).normalized(),
                   a.rotation_ * b.translation_ + a.translation_);
}

}  // namespace egofields
