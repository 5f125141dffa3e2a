#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "egofields/camera.h"
#include "egofields/mask.h"
#include "egofields/reconstruction.h"

namespace egofields {

struct PropagationConfig {
  double max_point_error = 2.0;     // px; support points must be strictly below
  std::size_t min_points = 10;      // below this the plane fit is skipped
  double plane_inlier_ratio = 0.02; // inlier distance as a fraction of median depth
  int ransac_iterations = 500;
  std::uint64_t seed = 0;
  int sample_stride = 2;
  std::optional<int> splat_radius;  // defaults to sample_stride
  double visibility_min = 0.2;

  int effective_splat_radius() const { return splat_radius.value_or(sample_stride); }
  void validate() const;  // throws InvalidArgument
};

// n . x = offset in world coordinates, |n| = 1.
struct FittedPlane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
};

struct LiftedObject {
  int object_id = 0;
  std::vector<Eigen::Vector3d> anchor_points;
  // Set when the plane fit succeeded; otherwise constant_depth holds the
  // median camera-frame depth used for every sample.
  std::optional<FittedPlane> plane;
  double constant_depth = 0.0;
  std::size_t plane_inliers = 0;
  std::vector<Eigen::Vector3d> mask_samples;

  bool uses_fallback() const { return !plane.has_value(); }
};

// The mask held constant: n copies of the reference.
std::vector<BinaryMask> fixed_in_2d(const BinaryMask& ref_mask, std::size_t n_frames);

// Lifts the mask onto a plane fitted to the sparse points projecting inside
// it. Throws LiftFailure when no point supports the mask or no mask sample
// lands in front of the camera.
LiftedObject lift_mask(const BinaryMask& ref_mask, const RegisteredFrame& ref_frame,
                       const CameraIntrinsics& intrinsics, const std::vector<SparsePoint>& points,
                       const PropagationConfig& config = {});

struct Reprojection {
  BinaryMask mask;
  bool visible = false;
  double in_view_fraction = 0.0;  // samples in frame with positive depth
};

// Splats every visible sample as an open disk, then closes with a 3x3 square.
// When fewer than visibility_min of the samples are in view the mask is empty.
Reprojection reproject_object(const LiftedObject& object, const RegisteredFrame& frame,
                              const CameraIntrinsics& intrinsics,
                              const PropagationConfig& config = {});

}  // namespace egofields
