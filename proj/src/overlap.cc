#include "egofields/overlap.h"

#include <algorithm>
#include <cmath>

#include "egofields/error.h"

namespace egofields {
namespace {

// Keeps the half-plane where inside(p) holds; `cross` intersects an edge
// with the boundary line.
template <typename Inside, typename Cross>
std::vector<Eigen::Vector2d> clip_edge(const std::vector<Eigen::Vector2d>& poly, Inside inside,
                                       Cross cross) {
  std::vector<Eigen::Vector2d> out;
  if (poly.empty()) return out;
  out.reserve(poly.size() + 2);
  Eigen::Vector2d prev = poly.back();
  bool prev_in = inside(prev);
  for (const auto& cur : poly) {
    const bool cur_in = inside(cur);
    if (cur_in) {
      if (!prev_in) out.push_back(cross(prev, cur));
      out.push_back(cur);
    } else if (prev_in) {
      out.push_back(cross(prev, cur));
    }
    prev = cur;
    prev_in = cur_in;
  }
  return out;
}

Eigen::Vector2d at_x(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double x) {
  const double t = (x - a.x()) / (b.x() - a.x());
  return {x, a.y() + t * (b.y() - a.y())};
}

Eigen::Vector2d at_y(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double y) {
  const double t = (y - a.y()) / (b.y() - a.y());
  return {a.x() + t * (b.x() - a.x()), y};
}

}  // namespace

std::vector<Eigen::Vector2d> clip_to_rectangle(const std::vector<Eigen::Vector2d>& polygon,
                                               double width, double height) {
  auto poly = clip_edge(
      polygon, [](const Eigen::Vector2d& p) { return p.x() >= 0.0; },
      [](const auto& a, const auto& b) { return at_x(a, b, 0.0); });
  poly = clip_edge(
      poly, [width](const Eigen::Vector2d& p) { return p.x() <= width; },
      [width](const auto& a, const auto& b) { return at_x(a, b, width); });
  poly = clip_edge(
      poly, [](const Eigen::Vector2d& p) { return p.y() >= 0.0; },
      [](const auto& a, const auto& b) { return at_y(a, b, 0.0); });
  poly = clip_edge(
      poly, [height](const Eigen::Vector2d& p) { return p.y() <= height; },
      [height](const auto& a, const auto& b) { return at_y(a, b, height); });
  return poly;
}

double polygon_area(const std::vector<Eigen::Vector2d>& polygon) {
  if (polygon.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const auto& p = polygon[i];
    const auto& q = polygon[(i + 1) % polygon.size()];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return std::abs(twice) * 0.5;
}

double visual_overlap(const Homography& h, double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) throw InvalidArgument("image size must be positive");
  const Eigen::Vector2d corners[4] = {{0, 0}, {width, 0}, {width, height}, {0, height}};
  std::vector<Eigen::Vector2d> quad;
  quad.reserve(4);
  for (const auto& c : corners) {
    const Eigen::Vector3d w = h.apply_homogeneous(c);
    // Positive w at the corners implies positive w over the whole rectangle,
    // so the warped quadrilateral is convex.
    if (!(w.z() > 0.0)) return 0.0;
    quad.emplace_back(w.head<2>() / w.z());
  }
  const double area = polygon_area(clip_to_rectangle(quad, width, height));
  return std::clamp(area / (width * height), 0.0, 1.0);
}

double symmetric_overlap(const Homography& h, double width, double height) {
  return std::min(visual_overlap(h, width, height), visual_overlap(h.inverse(), width, height));
}

OverlapScore measure_overlap(const FeatureSet& a, const FeatureSet& b, double width,
                             double height, const OverlapConfig& config) {
  OverlapScore score;
  const MatchSet matches = match(a, b, config.matching);
  score.matched_count = matches.size();
  if (matches.size() < std::max<std::size_t>(config.min_matches, 4)) return score;
  try {
    const auto est = estimate_homography(matches, a.keypoints, b.keypoints, config.ransac);
    score.inlier_count = est.inlier_count;
    score.r_tilde = symmetric_overlap(est.h, width, height);
  } catch (const NoModelFound&) {
  } catch (const DegenerateConfiguration&) {
  }
  return score;
}

}  // namespace egofields
