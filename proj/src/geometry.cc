#include "egofields/geometry.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "egofields/error.h"

namespace egofields {

std::optional<Projection> project(const Eigen::Vector3d& world, const RigidPose& pose,
                                  const CameraIntrinsics& intrinsics) {
  const Eigen::Vector3d cam = pose.apply(world);
  if (!(cam.z() > 0.0)) return std::nullopt;
  const Eigen::Vector2d normalized = cam.head<2>() / cam.z();
  return Projection{intrinsics.pixel_from_normalized(normalized), cam.z()};
}

Eigen::Vector3d backproject(const Eigen::Vector2d& pixel, double depth, const RigidPose& pose,
                            const CameraIntrinsics& intrinsics) {
  if (!(depth > 0.0)) throw InvalidArgument("backproject requires depth > 0");
  const Eigen::Vector2d n = intrinsics.normalized_from_pixel(pixel);
  const Eigen::Vector3d cam(n.x() * depth, n.y() * depth, depth);
  return pose.rotation().conjugate() * (cam - pose.translation());
}

Eigen::Vector3d pixel_ray(const Eigen::Vector2d& pixel, const RigidPose& pose,
                          const CameraIntrinsics& intrinsics) {
  const Eigen::Vector2d n = intrinsics.normalized_from_pixel(pixel);
  return (pose.rotation().conjugate() * Eigen::Vector3d(n.x(), n.y(), 1.0)).normalized();
}

Eigen::Quaterniond mean_rotation(std::span<const Eigen::Quaterniond> quaternions) {
  if (quaternions.empty()) throw InvalidArgument("mean_rotation of an empty set");
  const Eigen::Vector4d first = quaternions.front().coeffs();
  Eigen::Matrix4d accum = Eigen::Matrix4d::Zero();
  for (const auto& q : quaternions) {
    Eigen::Vector4d v = q.coeffs().normalized();
    if (v.dot(first) < 0.0) v = -v;
    accum += v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(accum);
  // Eigenvalues ascend; the last column is the principal eigenvector.
  const Eigen::Vector4d principal = solver.eigenvectors().col(3);
  // coeffs() order is (x, y, z, w).
  return canonical_quaternion(
      Eigen::Quaterniond(principal(3), principal(0), principal(1), principal(2)).normalized());
}

EulerAngles euler_from_rotation(const Eigen::Matrix3d& r) {
  EulerAngles e;
  const double sin_yaw = std::clamp(r(0, 2), -1.0, 1.0);
  e.yaw = std::asin(sin_yaw);
  const double cos_yaw = std::sqrt(std::max(0.0, 1.0 - sin_yaw * sin_yaw));
  // Within ~1e-6 of vertical yaw the pitch/roll split is ill-conditioned.
  if (cos_yaw < 1e-6) {
    e.roll = 0.0;
    e.pitch = std::atan2(r(2, 1), r(1, 1));
  } else {
    e.pitch = std::atan2(-r(1, 2), r(2, 2));
    e.roll = std::atan2(-r(0, 1), r(0, 0));
  }
  return e;
}

Eigen::Matrix3d rotation_from_euler(const EulerAngles& a) {
  return (Eigen::AngleAxisd(a.pitch, Eigen::Vector3d::UnitX()) *
          Eigen::AngleAxisd(a.yaw, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(a.roll, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

EulerAngles relative_orientation(const RigidPose& pose, const Eigen::Quaterniond& reference) {
  Eigen::Quaterniond ref = reference;
  if (std::abs(ref.norm() - 1.0) > 1e-15) ref.normalize();
  ref = canonical_quaternion(ref);
  if (ref.coeffs() == pose.rotation().coeffs()) return {};
  const Eigen::Quaterniond rel = ref.conjugate() * pose.rotation();
  return euler_from_rotation(rel.toRotationMatrix());
}

ReprojectionStats reprojection_stats(const Reconstruction& recon) {
  ReprojectionStats stats;
  const auto index = recon.frame_index();
  double sum = 0.0;
  double stored_sum = 0.0;
  std::size_t stored_count = 0;
  for (const auto& point : recon.points) {
    if (point.track.empty()) continue;
    stored_sum += point.error;
    ++stored_count;
    for (const auto& obs : point.track) {
      auto it = index.find(obs.frame);
      if (it == index.end()) {
        throw InvalidArgument("track references unknown frame '" + obs.frame + "'");
      }
      const RegisteredFrame& frame = recon.frames[it->second];
      const auto proj = project(point.position, frame.pose, recon.camera_for(frame));
      if (!proj) {
        ++stats.behind_camera;
        continue;
      }
      const double err = (proj->pixel - obs.xy).norm();
      sum += err;
      stats.max = std::max(stats.max, err);
      ++stats.observations;
    }
  }
  if (stored_count == 0) {
    throw InvalidArgument("reprojection error needs at least one point with a track");
  }
  stats.mean = stats.observations > 0 ? sum / static_cast<double>(stats.observations) : 0.0;
  stats.mean_stored = stored_sum / static_cast<double>(stored_count);
  return stats;
}

double mean_reprojection_error(const Reconstruction& recon) {
  return reprojection_stats(recon).mean;
}

}  // namespace egofields
