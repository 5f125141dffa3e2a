#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "egofields/features.h"

namespace egofields {

// 3x3 planar projective map, stored with unit Frobenius norm and h(2,2) >= 0.
class Homography {
 public:
  // Throws DegenerateConfiguration if |det| <= 1e-12 after normalization.
  explicit Homography(const Eigen::Matrix3d& h);
  static Homography identity() { return Homography(Eigen::Matrix3d::Identity()); }
  static Homography translation(double tx, double ty);

  const Eigen::Matrix3d& matrix() const { return h_; }
  Eigen::Vector3d apply_homogeneous(const Eigen::Vector2d& p) const;
  // Dehomogenized image of p; non-finite when p maps to infinity.
  Eigen::Vector2d transfer(const Eigen::Vector2d& p) const;
  Homography inverse() const;
  friend Homography operator*(const Homography& a, const Homography& b);

 private:
  Eigen::Matrix3d h_;
};

// Largest displacement between the two maps over the four image corners.
double corner_transfer_error(const Homography& estimate, const Homography& truth, double width,
                             double height);

// Normalized DLT: Hartley-normalizes both point sets (centroid at origin,
// mean distance sqrt(2)), solves the stacked homogeneous system by SVD and
// denormalizes. Needs >= 4 pairs; collinear or coincident configurations
// throw DegenerateConfiguration.
Homography dlt_solve(std::span<const Eigen::Vector2d> src, std::span<const Eigen::Vector2d> dst);

struct RansacConfig {
  int max_iterations = 2000;
  double inlier_threshold = 3.0;  // forward transfer error, px
  double confidence = 0.999;
  std::uint64_t seed = 0;
};

struct HomographyEstimate {
  Homography h = Homography::identity();
  std::vector<bool> inliers;
  std::size_t inlier_count = 0;
  int iterations = 0;
};

// RANSAC over 4-point samples with an adaptive iteration count, followed by a
// DLT re-fit on all inliers. Throws InsufficientMatches below 4 pairs and
// NoModelFound when no model reaches 4 inliers.
HomographyEstimate estimate_homography(std::span<const Eigen::Vector2d> src,
                                       std::span<const Eigen::Vector2d> dst,
                                       const RansacConfig& config = {});
HomographyEstimate estimate_homography(const MatchSet& matches, std::span<const Keypoint> a,
                                       std::span<const Keypoint> b,
                                       const RansacConfig& config = {});

}  // namespace egofields
