#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "egofields/camera.h"
#include "egofields/pose.h"

namespace egofields {

using CameraId = std::uint32_t;
using ImageId = std::uint32_t;
using PointId = std::uint64_t;

// One 2D feature of a registered frame; point_id is empty for features that
// were not triangulated (POINT3D_ID = -1 in images.txt).
struct Observation2D {
  Eigen::Vector2d xy = Eigen::Vector2d::Zero();
  std::optional<PointId> point_id;
};

struct RegisteredFrame {
  std::string name;
  double timestamp = 0.0;  // seconds from video start
  CameraId camera_id = 1;
  ImageId image_id = 0;
  RigidPose pose;
  std::vector<Observation2D> points2d;
};

struct TrackElement {
  std::string frame;             // RegisteredFrame::name
  std::size_t point2d_idx = 0;   // index into that frame's points2d
  Eigen::Vector2d xy = Eigen::Vector2d::Zero();
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct SparsePoint {
  PointId id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::optional<Rgb> color;
  double error = 0.0;  // stored reprojection error, px
  std::vector<TrackElement> track;
};

struct Reconstruction {
  std::map<CameraId, CameraIntrinsics> intrinsics;
  std::vector<RegisteredFrame> frames;
  std::vector<SparsePoint> points;
  // Frames in the source video, registered or not.
  std::size_t total_frame_count = 0;

  std::size_t registered_count() const { return frames.size(); }

  const RegisteredFrame* find_frame(std::string_view name) const;
  RegisteredFrame* find_frame(std::string_view name);
  const CameraIntrinsics& camera_for(const RegisteredFrame& frame) const;
  std::unordered_map<std::string, std::size_t> frame_index() const;

  // Appends an observation of points[point_index] to the named frame's
  // points2d and the point's track, keeping both sides consistent.
  void add_observation(std::size_t point_index, std::string_view frame_name,
                       const Eigen::Vector2d& xy);

  // Throws InvalidArgument on duplicate names, dangling camera ids, dangling
  // track references, negative errors or registered > total.
  void validate() const;
};

}  // namespace egofields
