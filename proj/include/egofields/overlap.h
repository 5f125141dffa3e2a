#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "egofields/features.h"
#include "egofields/homography.h"

namespace egofields {

struct OverlapScore {
  double r_tilde = 0.0;  // fraction of the image area, in [0, 1]
  std::size_t inlier_count = 0;
  std::size_t matched_count = 0;
};

// Fraction of the width x height image covered by the source frame's corner
// quadrilateral warped by h and clipped to the image rectangle. Returns 0 if
// any warped corner has non-positive homogeneous w.
double visual_overlap(const Homography& h, double width, double height);

// min(visual_overlap(h), visual_overlap(h^-1)); invariant to swapping frames.
double symmetric_overlap(const Homography& h, double width, double height);

// Sutherland-Hodgman clip of a polygon against [0,width] x [0,height].
std::vector<Eigen::Vector2d> clip_to_rectangle(const std::vector<Eigen::Vector2d>& polygon,
                                               double width, double height);
double polygon_area(const std::vector<Eigen::Vector2d>& polygon);

struct OverlapConfig {
  MatchConfig matching;
  RansacConfig ransac;
  std::size_t min_matches = 20;  // fewer matches -> overlap 0
};

// Matches two frames, fits a homography and returns the symmetric overlap.
// Matching or fitting failure yields r_tilde = 0 rather than an error.
OverlapScore measure_overlap(const FeatureSet& a, const FeatureSet& b, double width,
                             double height, const OverlapConfig& config = {});

}  // namespace egofields
