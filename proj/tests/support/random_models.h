#pragma once

#include <random>
#include <string>

#include <fmt/format.h>

#include "egofields/reconstruction.h"
#include "support/oracles.h"

namespace egofields::testing {

inline Eigen::Quaterniond random_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized();
}

inline RigidPose random_pose(std::mt19937_64& rng, double translation_scale = 2.0) {
  std::uniform_real_distribution<double> u(-translation_scale, translation_scale);
  return RigidPose(random_quaternion(rng), Eigen::Vector3d(u(rng), u(rng), u(rng)));
}

inline CameraIntrinsics random_intrinsics(std::mt19937_64& rng, CameraModel model) {
  std::uniform_real_distribution<double> f(200.0, 500.0), c(-10.0, 10.0), k(-0.05, 0.05);
  const int w = 456, h = 256;
  switch (model) {
    case CameraModel::kSimplePinhole:
      return CameraIntrinsics(model, w, h, {f(rng), w / 2.0 + c(rng), h / 2.0 + c(rng)});
    case CameraModel::kPinhole:
      return CameraIntrinsics(model, w, h, {f(rng), f(rng), w / 2.0 + c(rng), h / 2.0 + c(rng)});
    case CameraModel::kSimpleRadial:
      return CameraIntrinsics(model, w, h,
                              {f(rng), w / 2.0 + c(rng), h / 2.0 + c(rng), k(rng)});
    case CameraModel::kOpenCV:
      return CameraIntrinsics(model, w, h,
                              {f(rng), f(rng), w / 2.0 + c(rng), h / 2.0 + c(rng), k(rng),
                               k(rng) * 0.1, k(rng) * 0.01, k(rng) * 0.01});
  }
  return CameraIntrinsics::simple_pinhole(w, h, 300, w / 2.0, h / 2.0);
}

// Random model with consistent tracks and 2D lists. Some 2D points are left
// untriangulated (POINT3D_ID -1).
inline Reconstruction random_reconstruction(std::mt19937_64& rng, int num_frames = 6,
                                            int num_points = 25, int num_cameras = 1) {
  Reconstruction r;
  const CameraModel models[] = {CameraModel::kSimplePinhole, CameraModel::kPinhole,
                                CameraModel::kSimpleRadial, CameraModel::kOpenCV};
  std::uniform_int_distribution<int> model_pick(0, 3);
  for (int c = 1; c <= num_cameras; ++c) {
    r.intrinsics.emplace(c, random_intrinsics(rng, models[model_pick(rng)]));
  }
  std::uniform_int_distribution<int> cam_pick(1, num_cameras);
  std::uniform_real_distribution<double> u(0.0, 1.0), pos(-5.0, 5.0), px(0.0, 456.0);
  std::vector<int> frame_order(num_frames);
  for (int i = 0; i < num_frames; ++i) frame_order[i] = i;
  std::shuffle(frame_order.begin(), frame_order.end(), rng);
  for (int i = 0; i < num_frames; ++i) {
    RegisteredFrame f;
    f.image_id = static_cast<ImageId>(frame_order[i] + 1);
    f.name = fmt::format("frame_{:010d}.jpg", 100 * frame_order[i] + 1);
    f.camera_id = static_cast<CameraId>(cam_pick(rng));
    f.pose = random_pose(rng);
    r.frames.push_back(std::move(f));
  }
  for (int p = 0; p < num_points; ++p) {
    SparsePoint sp;
    sp.id = static_cast<PointId>(p * 3 + 7);
    sp.position = {pos(rng), pos(rng), pos(rng)};
    sp.color = Rgb{static_cast<std::uint8_t>(u(rng) * 255), static_cast<std::uint8_t>(u(rng) * 255),
                   static_cast<std::uint8_t>(u(rng) * 255)};
    sp.error = u(rng) * 2.0;
    r.points.push_back(std::move(sp));
    std::vector<int> views(num_frames);
    for (int i = 0; i < num_frames; ++i) views[i] = i;
    std::shuffle(views.begin(), views.end(), rng);
    const int track_len = 2 + static_cast<int>(u(rng) * (num_frames - 1));
    for (int k = 0; k < std::min(track_len, num_frames); ++k) {
      r.add_observation(r.points.size() - 1, r.frames[views[k]].name, {px(rng), px(rng) * 0.5});
    }
  }
  for (auto& f : r.frames) {
    const int extra = static_cast<int>(u(rng) * 4);
    for (int k = 0; k < extra; ++k) f.points2d.push_back({{px(rng), px(rng) * 0.5}, std::nullopt});
  }
  r.total_frame_count = r.frames.size() + static_cast<std::size_t>(u(rng) * 10);
  return r;
}

// Projective map sending the image corners to corners jittered by up to
// `spread` px (and an overall shift of up to `shift` px); every image point
// keeps positive homogeneous w.
inline Eigen::Matrix3d random_projective(std::mt19937_64& rng, double width, double height,
                                         double spread, double shift) {
  std::uniform_real_distribution<double> j(-spread, spread);
  std::uniform_real_distribution<double> s(-shift, shift);
  const std::vector<Eigen::Vector2d> src = {{0, 0}, {width, 0}, {width, height}, {0, height}};
  for (;;) {
    const Eigen::Vector2d off(s(rng), s(rng));
    std::vector<Eigen::Vector2d> dst;
    for (const auto& c : src) dst.push_back(c + off + Eigen::Vector2d(j(rng), j(rng)));
    Eigen::Matrix3d h = oracle::raw_dlt(src, dst);
    if (h(2, 2) < 0) h = -h;
    bool ok = true;
    for (const auto& c : src) ok = ok && (h * c.homogeneous()).z() > 0;
    // A convex destination quad keeps w > 0 over the whole rectangle.
    for (int i = 0; i < 4 && ok; ++i) {
      const Eigen::Vector2d e1 = dst[(i + 1) % 4] - dst[i];
      const Eigen::Vector2d e2 = dst[(i + 2) % 4] - dst[(i + 1) % 4];
      ok = e1.x() * e2.y() - e1.y() * e2.x() > 0;
    }
    if (ok) return h;
  }
}

}  // namespace egofields::testing
