#include "egofields/reconstruction.h"

#include <unordered_set>

#include "egofields/error.h"

namespace egofields {

const RegisteredFrame* Reconstruction::find_frame(std::string_view name) const {
  for (const auto& f : frames) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

RegisteredFrame* Reconstruction::find_frame(std::string_view name) {
  for (auto& f : frames) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const CameraIntrinsics& Reconstruction::camera_for(const RegisteredFrame& frame) const {
  auto it = intrinsics.find(frame.camera_id);
  if (it == intrinsics.end()) {
    throw InvalidArgument("frame '" + frame.name + "' references missing camera " +
                          std::to_string(frame.camera_id));
  }
  return it->second;
}

std::unordered_map<std::string, std::size_t> Reconstruction::frame_index() const {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) index.emplace(frames[i].name, i);
  return index;
}

void Reconstruction::add_observation(std::size_t point_index, std::string_view frame_name,
                                     const Eigen::Vector2d& xy) {
  RegisteredFrame* frame = find_frame(frame_name);
  if (frame == nullptr) {
    throw InvalidArgument("observation references unknown frame '" + std::string(frame_name) +
                          "'");
  }
  SparsePoint& point = points.at(point_index);
  frame->points2d.push_back({xy, point.id});
  point.track.push_back({frame->name, frame->points2d.size() - 1, xy});
}

void Reconstruction::validate() const {
  std::unordered_set<std::string> names;
  for (const auto& f : frames) {
    if (!names.insert(f.name).second) {
      throw InvalidArgument("duplicate frame name '" + f.name + "'");
    }
    if (f.timestamp < 0.0) throw InvalidArgument("negative timestamp for '" + f.name + "'");
    if (!intrinsics.contains(f.camera_id)) {
      throw InvalidArgument("frame '" + f.name + "' references missing camera " +
                            std::to_string(f.camera_id));
    }
  }
  if (frames.size() > total_frame_count) {
    throw InvalidArgument("registered frames (" + std::to_string(frames.size()) +
                          ") exceed total frame count (" + std::to_string(total_frame_count) +
                          ")");
  }
  const auto index = frame_index();
  for (const auto& p : points) {
    if (!(p.error >= 0.0)) {
      throw InvalidArgument("point " + std::to_string(p.id) + " has negative error");
    }
    if (p.track.size() == 1) {
      throw InvalidArgument("point " + std::to_string(p.id) + " has a single-view track");
    }
    for (const auto& t : p.track) {
      auto it = index.find(t.frame);
      if (it == index.end()) {
        throw InvalidArgument("point " + std::to_string(p.id) +
                              " references unknown frame '" + t.frame + "'");
      }
      if (t.point2d_idx >= frames[it->second].points2d.size()) {
        throw InvalidArgument("point " + std::to_string(p.id) +
                              " references out-of-range 2D point in '" + t.frame + "'");
      }
    }
  }
}

}  // namespace egofields
