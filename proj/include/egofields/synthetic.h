#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <opencv2/core.hpp>

#include "egofields/camera.h"
#include "egofields/frame_source.h"
#include "egofields/homography.h"
#include "egofields/mask.h"
#include "egofields/pose.h"
#include "egofields/reconstruction.h"

namespace egofields {

// Rectangle origin + a*u + b*v with |a| <= half_u, |b| <= half_v, carrying a
// value-noise texture. object_id 0 marks background geometry.
struct TexturedPlane {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d u_axis = Eigen::Vector3d::UnitX();
  Eigen::Vector3d v_axis = Eigen::Vector3d::UnitY();
  double half_u = 1.0;
  double half_v = 1.0;
  std::uint64_t texture_seed = 1;
  double texel = 0.01;  // lattice spacing of the finest octave, world units
  int octaves = 4;
  int object_id = 0;

  Eigen::Vector3d normal() const { return u_axis.cross(v_axis).normalized(); }
  double offset() const { return normal().dot(origin); }  // n . x = offset
};

struct SyntheticScene {
  std::string name = "scene";
  CameraIntrinsics intrinsics = CameraIntrinsics::simple_pinhole(456, 256, 300.0, 228.0, 128.0);
  std::vector<TexturedPlane> planes;
  std::vector<RigidPose> trajectory;
  double fps = 50.0;

  std::size_t size() const { return trajectory.size(); }
  int width() const { return intrinsics.width(); }
  int height() const { return intrinsics.height(); }
  // Checks axes, extents and that no camera center lies on a plane surface.
  // Throws InvalidArgument.
  void validate() const;
};

// Texture value in [0, 1] at plane coordinates (a, b).
double texture_value(const TexturedPlane& plane, double a, double b);

struct RayHit {
  std::size_t plane = 0;
  double depth = 0.0;  // along the camera z axis
};
// Nearest surface hit along the ray through pixel position `pixel`
// (continuous coordinates, pixel centers at +0.5).
std::optional<RayHit> cast_ray(const SyntheticScene& scene, std::size_t frame,
                               const Eigen::Vector2d& pixel);

// 8-bit grayscale rendering; misses are mid-gray.
cv::Mat render(const SyntheticScene& scene, std::size_t frame);
// Pixels whose nearest surface belongs to object_id.
BinaryMask object_mask(const SyntheticScene& scene, std::size_t frame, int object_id);

// Plane-induced homography mapping pixels of frame i to frame j.
Homography analytic_homography(const SyntheticScene& scene, std::size_t plane, std::size_t i,
                               std::size_t j);
// Symmetric visual overlap implied by the analytic homography of `plane`.
double analytic_overlap(const SyntheticScene& scene, std::size_t i, std::size_t j,
                        std::size_t plane = 0);

// Uniform seeded samples on a plane's rectangle.
std::vector<Eigen::Vector3d> sample_plane_points(const TexturedPlane& plane, std::size_t count,
                                                 std::uint64_t seed);

// Surface points hit by rays through uniformly drawn pixels of uniformly
// drawn frames, so every point is visible somewhere in the trajectory.
std::vector<Eigen::Vector3d> sample_surface_points(const SyntheticScene& scene, std::size_t count,
                                                   std::uint64_t seed);
// Exact reconstruction: every trajectory frame registered with its true pose,
// and each point observed (noise free) wherever it is in frame and
// unoccluded. Points seen fewer than twice are dropped.
Reconstruction scene_reconstruction(const SyntheticScene& scene,
                                    const std::vector<Eigen::Vector3d>& points);

// Frame names follow frame_{index+1:010d}.png.
std::string synthetic_frame_name(std::size_t index);

// Renders frames on demand.
class SyntheticFrameSource : public FrameSource {
 public:
  explicit SyntheticFrameSource(const SyntheticScene& scene) : scene_(scene) {}
  std::size_t size() const override { return scene_.size(); }
  FrameInfo info(std::size_t index) const override;
  cv::Mat load(std::size_t index) const override;
  cv::Size frame_size() const override { return {scene_.width(), scene_.height()}; }

 private:
  const SyntheticScene& scene_;
};

void write_frames(const SyntheticScene& scene, const std::filesystem::path& dir);

// Presets. All look along +z at a wall plane (index 0) at depth `wall_depth`.
namespace presets {

inline constexpr double kWallDepth = 2.0;

// Width of the wall strip visible at kWallDepth, world units.
double view_width(const SyntheticScene& scene);

SyntheticScene static_camera(std::size_t frames, std::uint64_t seed = 1);
// Lateral translation by `step` view widths per frame.
SyntheticScene lateral_pan(std::size_t frames, double step, std::uint64_t seed = 1);
// Pure rotation about the camera y axis, `degrees` per frame.
SyntheticScene yaw_pan(std::size_t frames, double degrees, std::uint64_t seed = 1);
// Static segment, then the camera turns to an unrelated wall for the rest.
SyntheticScene abrupt_cut(std::size_t first, std::size_t second, std::uint64_t seed = 1);

struct HotSpotLayout {
  std::size_t dwell_before = 100;
  std::size_t transition = 20;
  std::size_t dwell_after = 100;
  double step = 0.04;  // view widths per transition frame
};
SyntheticScene hot_spot(const HotSpotLayout& layout = {}, std::uint64_t seed = 1);

// Several long dwells with small head jitter joined by short fast walks.
SyntheticScene skewed_walk(std::uint64_t seed);

// Camera translating parallel to the wall past a static planar object
// (object_id 1) mounted in front of it.
SyntheticScene object_flyby(std::size_t frames, double total_shift, std::uint64_t seed = 1);

}  // namespace presets

// Scene presets as JSON.
std::string format_scene_json(const SyntheticScene& scene);
SyntheticScene parse_scene_json(const std::string& text);
SyntheticScene read_scene_json(const std::filesystem::path& path);
void write_scene_json(const SyntheticScene& scene, const std::filesystem::path& path);

}  // namespace egofields
