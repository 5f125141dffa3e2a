#include "egofields/propagation.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SVD>
#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include "egofields/error.h"
#include "egofields/geometry.h"

namespace egofields {
namespace {

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// Total least squares plane; nullopt when the points are (nearly) collinear.
std::optional<FittedPlane> fit_plane(const std::vector<Eigen::Vector3d>& pts) {
  if (pts.size() < 3) return std::nullopt;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Eigen::MatrixXd a(pts.size(), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = pts[i] - centroid;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
  const Eigen::Vector3d s = svd.singularValues();
  if (s(1) <= 1e-9 * std::max(s(0), 1e-300)) return std::nullopt;
  FittedPlane plane;
  plane.normal = svd.matrixV().col(2).normalized();
  plane.offset = plane.normal.dot(centroid);
  return plane;
}

std::optional<FittedPlane> plane_through(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                         const Eigen::Vector3d& c) {
  const Eigen::Vector3d n = (b - a).cross(c - a);
  const double scale = (b - a).norm() * (c - a).norm();
  if (scale == 0.0 || n.norm() <= 1e-9 * scale) return std::nullopt;
  FittedPlane p;
  p.normal = n.normalized();
  p.offset = p.normal.dot(a);
  return p;
}

struct PlaneFit {
  FittedPlane plane;
  std::size_t inliers = 0;
};

std::optional<PlaneFit> ransac_plane(const std::vector<Eigen::Vector3d>& pts, double threshold,
                                     const PropagationConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  const auto count_inliers = [&](const FittedPlane& p) {
    std::size_t n = 0;
    for (const auto& x : pts) n += std::abs(p.normal.dot(x) - p.offset) <= threshold ? 1 : 0;
    return n;
  };
  std::optional<FittedPlane> best;
  std::size_t best_count = 0;
  for (int it = 0; it < cfg.ransac_iterations; ++it) {
    const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
    if (i == j || j == k || i == k) continue;
    const auto cand = plane_through(pts[i], pts[j], pts[k]);
    if (!cand) continue;
    const std::size_t n = count_inliers(*cand);
    if (n > best_count) {
      best = cand;
      best_count = n;
    }
  }
  if (!best) return std::nullopt;
  std::vector<Eigen::Vector3d> inliers;
  for (const auto& x : pts) {
    if (std::abs(best->normal.dot(x) - best->offset) <= threshold) inliers.push_back(x);
  }
  const auto refined = fit_plane(inliers);
  if (!refined) return std::nullopt;
  return PlaneFit{*refined, count_inliers(*refined)};
}

}  // namespace

void PropagationConfig::validate() const {
  if (sample_stride < 1) throw InvalidArgument("sample_stride must be >= 1");
  if (effective_splat_radius() < 1) throw InvalidArgument("splat_radius must be >= 1");
  if (!(visibility_min >= 0.0 && visibility_min <= 1.0)) {
    throw InvalidArgument("visibility_min must lie in [0,1]");
  }
  if (!(plane_inlier_ratio > 0.0)) throw InvalidArgument("plane_inlier_ratio must be positive");
  if (max_point_error < 0.0) throw InvalidArgument("max_point_error must be >= 0");
}

std::vector<BinaryMask> fixed_in_2d(const BinaryMask& ref_mask, std::size_t n_frames) {
  return std::vector<BinaryMask>(n_frames, ref_mask);
}

LiftedObject lift_mask(const BinaryMask& ref_mask, const RegisteredFrame& ref_frame,
                       const CameraIntrinsics& intrinsics, const std::vector<SparsePoint>& points,
                       const PropagationConfig& config) {
  config.validate();
  if (ref_mask.width != intrinsics.width() || ref_mask.height != intrinsics.height()) {
    throw InvalidArgument("lift_mask: mask size does not match the camera");
  }
  LiftedObject obj;
  obj.object_id = ref_mask.object_id;

  std::vector<double> depths;
  for (const auto& p : points) {
    if (!(p.error < config.max_point_error)) continue;
    const auto proj = project(p.position, ref_frame.pose, intrinsics);
    if (!proj || !intrinsics.in_frame(proj->pixel)) continue;
    const int x = static_cast<int>(std::floor(proj->pixel.x()));
    const int y = static_cast<int>(std::floor(proj->pixel.y()));
    if (!ref_mask.at(x, y)) continue;
    obj.anchor_points.push_back(p.position);
    depths.push_back(proj->depth);
  }
  if (obj.anchor_points.empty()) {
    throw LiftFailure(fmt::format("object {}: no sparse points inside the mask", obj.object_id));
  }
  const double median_depth = median(depths);
  obj.constant_depth = median_depth;

  if (obj.anchor_points.size() >= config.min_points) {
    if (auto fit = ransac_plane(obj.anchor_points, config.plane_inlier_ratio * median_depth, config)) {
      obj.plane = fit->plane;
      obj.plane_inliers = fit->inliers;
    }
  }

  const Eigen::Vector3d center = ref_frame.pose.center();
  for (int y = 0; y < ref_mask.height; y += config.sample_stride) {
    for (int x = 0; x < ref_mask.width; x += config.sample_stride) {
      if (!ref_mask.at(x, y)) continue;
      const Eigen::Vector2d pixel(x + 0.5, y + 0.5);
      if (!obj.plane) {
        obj.mask_samples.push_back(backproject(pixel, median_depth, ref_frame.pose, intrinsics));
        continue;
      }
      const Eigen::Vector3d dir = pixel_ray(pixel, ref_frame.pose, intrinsics);
      const double denom = obj.plane->normal.dot(dir);
      if (std::abs(denom) < 1e-12) continue;
      const double t = (obj.plane->offset - obj.plane->normal.dot(center)) / denom;
      if (!(t > 0.0)) continue;
      obj.mask_samples.push_back(center + t * dir);
    }
  }
  if (obj.mask_samples.empty()) {
    throw LiftFailure(fmt::format("object {}: no mask sample lies in front of the camera",
                                  obj.object_id));
  }
  return obj;
}

Reprojection reproject_object(const LiftedObject& object, const RegisteredFrame& frame,
                              const CameraIntrinsics& intrinsics, const PropagationConfig& config) {
  config.validate();
  const int w = intrinsics.width(), h = intrinsics.height();
  Reprojection out{BinaryMask(w, h, object.object_id), false, 0.0};
  if (object.mask_samples.empty()) return out;

  const int r = config.effective_splat_radius();
  cv::Mat splat(h, w, CV_8U, cv::Scalar(0));
  std::size_t in_view = 0;
  for (const auto& s : object.mask_samples) {
    const auto proj = project(s, frame.pose, intrinsics);
    if (!proj || !intrinsics.in_frame(proj->pixel)) continue;
    ++in_view;
    const int cx = static_cast<int>(std::floor(proj->pixel.x()));
    const int cy = static_cast<int>(std::floor(proj->pixel.y()));
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        if (dx * dx + dy * dy >= r * r) continue;
        const int u = cx + dx, v = cy + dy;
        if (u >= 0 && v >= 0 && u < w && v < h) splat.at<std::uint8_t>(v, u) = 255;
      }
    }
  }
  out.in_view_fraction = static_cast<double>(in_view) / static_cast<double>(object.mask_samples.size());
  out.visible = out.in_view_fraction >= config.visibility_min;
  if (!out.visible) return out;

  cv::Mat closed;
  cv::morphologyEx(splat, closed, cv::MORPH_CLOSE, cv::getStructuringElement(cv::MORPH_RECT, {3, 3}));
  out.mask = mask_from_mat(closed, object.object_id);
  return out;
}

}  // namespace egofields
