#include "egofields/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "egofields/error.h"
#include "egofields/geometry.h"
#include "egofields/io_util.h"
#include "egofields/overlap.h"

namespace egofields {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(ix) * 0xC2B2AE3D27D4EB4FULL ^
                                                   static_cast<std::uint64_t>(iy) * 0x165667B19E3779F9ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

Eigen::Matrix3d calibration(const CameraIntrinsics& k) {
  Eigen::Matrix3d m;
  m << k.fx(), 0, k.cx(), 0, k.fy(), k.cy(), 0, 0, 1;
  return m;
}

// Ray/plane intersection; returns the camera depth of the hit.
std::optional<double> intersect(const TexturedPlane& plane, const Eigen::Vector3d& center,
                                const Eigen::Vector3d& dir) {
  const Eigen::Vector3d n = plane.normal();
  const double denom = n.dot(dir);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = (plane.offset() - n.dot(center)) / denom;
  if (!(t > 1e-9)) return std::nullopt;
  const Eigen::Vector3d rel = center + t * dir - plane.origin;
  if (std::abs(rel.dot(plane.u_axis)) > plane.half_u ||
      std::abs(rel.dot(plane.v_axis)) > plane.half_v) {
    return std::nullopt;
  }
  return t;
}

struct FrameRays {
  Eigen::Vector3d center;
  Eigen::Matrix3d world_from_camera;
};

FrameRays frame_rays(const SyntheticScene& scene, std::size_t frame) {
  const RigidPose& pose = scene.trajectory.at(frame);
  return {pose.center(), pose.rotation_matrix().transpose()};
}

std::optional<RayHit> cast(const SyntheticScene& scene, const FrameRays& fr,
                           const Eigen::Vector2d& pixel, Eigen::Vector3d* hit_point) {
  const Eigen::Vector2d xy = scene.intrinsics.normalized_from_pixel(pixel);
  // Camera-frame direction with unit z, so the ray parameter is the depth.
  const Eigen::Vector3d dir = fr.world_from_camera * Eigen::Vector3d(xy.x(), xy.y(), 1.0);
  std::optional<RayHit> best;
  for (std::size_t i = 0; i < scene.planes.size(); ++i) {
    const auto t = intersect(scene.planes[i], fr.center, dir);
    if (t && (!best || *t < best->depth)) best = RayHit{i, *t};
  }
  if (best && hit_point) *hit_point = fr.center + best->depth * dir;
  return best;
}

RigidPose camera_at(const Eigen::Vector3d& center, double yaw = 0.0) {
  return RigidPose::from_camera_center(
      Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix(), center);
}

TexturedPlane wall(double depth, std::uint64_t seed) {
  TexturedPlane p;
  p.origin = {0.0, 0.0, depth};
  p.half_u = 60.0;
  p.half_v = 8.0;
  p.texture_seed = seed;
  p.texel = 0.02;
  return p;
}

SyntheticScene base_scene(std::string name, std::uint64_t seed) {
  SyntheticScene s;
  s.name = std::move(name);
  s.planes.push_back(wall(presets::kWallDepth, seed));
  return s;
}

}  // namespace

void SyntheticScene::validate() const {
  for (const auto& p : planes) {
    if (std::abs(p.u_axis.norm() - 1.0) > 1e-9 || std::abs(p.v_axis.norm() - 1.0) > 1e-9 ||
        std::abs(p.u_axis.dot(p.v_axis)) > 1e-9) {
      throw InvalidArgument("plane axes must be orthonormal");
    }
    if (!(p.half_u > 0.0) || !(p.half_v > 0.0) || !(p.texel > 0.0) || p.octaves < 1) {
      throw InvalidArgument("plane extents, texel and octaves must be positive");
    }
    for (const auto& pose : trajectory) {
      const Eigen::Vector3d rel = pose.center() - p.origin;
      if (std::abs(rel.dot(p.normal())) < 1e-9 && std::abs(rel.dot(p.u_axis)) <= p.half_u &&
          std::abs(rel.dot(p.v_axis)) <= p.half_v) {
        throw InvalidArgument("camera center lies on scene geometry");
      }
    }
  }
  if (!(fps > 0.0)) throw InvalidArgument("fps must be positive");
}

double texture_value(const TexturedPlane& plane, double a, double b) {
  double sum = 0.0;
  double spacing = plane.texel;
  for (int o = 0; o < plane.octaves; ++o, spacing *= 2.0) {
    const double x = a / spacing;
    const double y = b / spacing;
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const double tx = x - fx;
    const double ty = y - fy;
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const std::uint64_t seed = splitmix(plane.texture_seed + 0x51ULL * static_cast<std::uint64_t>(o));
    const double v00 = lattice(seed, ix, iy);
    const double v10 = lattice(seed, ix + 1, iy);
    const double v01 = lattice(seed, ix, iy + 1);
    const double v11 = lattice(seed, ix + 1, iy + 1);
    sum += (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11);
  }
  // Averaging octaves shrinks the spread; stretch it back toward [0, 1].
  const double mean = sum / plane.octaves;
  return std::clamp(0.5 + 2.2 * (mean - 0.5), 0.0, 1.0);
}

std::optional<RayHit> cast_ray(const SyntheticScene& scene, std::size_t frame,
                               const Eigen::Vector2d& pixel) {
  return cast(scene, frame_rays(scene, frame), pixel, nullptr);
}

cv::Mat render(const SyntheticScene& scene, std::size_t frame) {
  const FrameRays fr = frame_rays(scene, frame);
  cv::Mat img(scene.height(), scene.width(), CV_8U);
  for (int y = 0; y < img.rows; ++y) {
    auto* row = img.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.cols; ++x) {
      Eigen::Vector3d p;
      const auto hit = cast(scene, fr, {x + 0.5, y + 0.5}, &p);
      if (!hit) {
        row[x] = 128;
        continue;
      }
      const TexturedPlane& plane = scene.planes[hit->plane];
      const Eigen::Vector3d rel = p - plane.origin;
      const double v = texture_value(plane, rel.dot(plane.u_axis), rel.dot(plane.v_axis));
      row[x] = static_cast<std::uint8_t>(std::lround(20.0 + 215.0 * v));
    }
  }
  return img;
}

BinaryMask object_mask(const SyntheticScene& scene, std::size_t frame, int object_id) {
  const FrameRays fr = frame_rays(scene, frame);
  BinaryMask m(scene.width(), scene.height(), object_id);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const auto hit = cast(scene, fr, {x + 0.5, y + 0.5}, nullptr);
      if (hit && scene.planes[hit->plane].object_id == object_id) m.set(x, y);
    }
  }
  return m;
}

Homography analytic_homography(const SyntheticScene& scene, std::size_t plane, std::size_t i,
                               std::size_t j) {
  const TexturedPlane& p = scene.planes.at(plane);
  const RigidPose& a = scene.trajectory.at(i);
  const RigidPose& b = scene.trajectory.at(j);
  const Eigen::Matrix3d ra = a.rotation_matrix();
  const Eigen::Matrix3d r_ab = b.rotation_matrix() * ra.transpose();
  const Eigen::Vector3d t_ab = b.translation() - r_ab * a.translation();
  const Eigen::Vector3d n_a = ra * p.normal();
  const double d_a = p.offset() + n_a.dot(a.translation());
  if (std::abs(d_a) < 1e-12) throw DegenerateConfiguration("camera lies on the plane");
  const Eigen::Matrix3d k = calibration(scene.intrinsics);
  return Homography(k * (r_ab + t_ab * n_a.transpose() / d_a) * k.inverse());
}

double analytic_overlap(const SyntheticScene& scene, std::size_t i, std::size_t j,
                        std::size_t plane) {
  try {
    return symmetric_overlap(analytic_homography(scene, plane, i, j), scene.width(),
                             scene.height());
  } catch (const DegenerateConfiguration&) {
    return 0.0;
  }
}

std::vector<Eigen::Vector3d> sample_plane_points(const TexturedPlane& plane, std::size_t count,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ua(-plane.half_u, plane.half_u);
  std::uniform_real_distribution<double> ub(-plane.half_v, plane.half_v);
  std::vector<Eigen::Vector3d> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double a = ua(rng);
    const double b = ub(rng);
    out.push_back(plane.origin + a * plane.u_axis + b * plane.v_axis);
  }
  return out;
}

std::vector<Eigen::Vector3d> sample_surface_points(const SyntheticScene& scene, std::size_t count,
                                                   std::uint64_t seed) {
  if (scene.size() == 0) throw InvalidArgument("scene has no frames");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> frame(0, scene.size() - 1);
  std::uniform_real_distribution<double> ux(0.0, scene.width()), uy(0.0, scene.height());
  std::vector<Eigen::Vector3d> out;
  out.reserve(count);
  // Bounded so that a scene without any visible surface cannot loop forever.
  for (std::size_t attempt = 0; out.size() < count && attempt < 20 * count; ++attempt) {
    const std::size_t f = frame(rng);
    const FrameRays fr = frame_rays(scene, f);
    Eigen::Vector3d hit;
    if (cast(scene, fr, {ux(rng), uy(rng)}, &hit)) out.push_back(hit);
  }
  return out;
}

Reconstruction scene_reconstruction(const SyntheticScene& scene,
                                    const std::vector<Eigen::Vector3d>& points) {
  Reconstruction r;
  r.intrinsics.emplace(1, scene.intrinsics);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    RegisteredFrame f;
    f.name = synthetic_frame_name(i);
    f.timestamp = static_cast<double>(i) / scene.fps;
    f.camera_id = 1;
    f.image_id = static_cast<ImageId>(i + 1);
    f.pose = scene.trajectory[i];
    r.frames.push_back(std::move(f));
  }
  r.total_frame_count = scene.size();
  std::vector<FrameRays> rays;
  for (std::size_t i = 0; i < scene.size(); ++i) rays.push_back(frame_rays(scene, i));

  PointId next_id = 1;
  for (const auto& x : points) {
    std::vector<std::pair<std::size_t, Eigen::Vector2d>> seen;
    for (std::size_t i = 0; i < scene.size(); ++i) {
      const auto proj = project(x, scene.trajectory[i], scene.intrinsics);
      if (!proj || !scene.intrinsics.in_frame(proj->pixel)) continue;
      const auto hit = cast(scene, rays[i], proj->pixel, nullptr);
      if (!hit || std::abs(hit->depth - proj->depth) > 1e-6 * proj->depth) continue;
      seen.emplace_back(i, proj->pixel);
    }
    if (seen.size() < 2) continue;
    SparsePoint sp;
    sp.id = next_id++;
    sp.position = x;
    sp.error = 0.0;
    r.points.push_back(std::move(sp));
    for (const auto& [frame, px] : seen) {
      r.add_observation(r.points.size() - 1, r.frames[frame].name, px);
    }
  }
  return r;
}

std::string synthetic_frame_name(std::size_t index) {
  return fmt::format("frame_{:010d}.png", index + 1);
}

FrameInfo SyntheticFrameSource::info(std::size_t index) const {
  if (index >= size()) throw InvalidArgument("frame index out of range");
  return {synthetic_frame_name(index), static_cast<double>(index) / scene_.fps};
}

cv::Mat SyntheticFrameSource::load(std::size_t index) const {
  if (index >= size()) throw FrameReadError(index, "frame index out of range");
  return render(scene_, index);
}

void write_frames(const SyntheticScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto path = dir / synthetic_frame_name(i);
    if (!cv::imwrite(path.string(), render(scene, i))) {
      throw Error("cannot write '" + path.string() + "'");
    }
  }
}

namespace presets {

double view_width(const SyntheticScene& scene) {
  return scene.width() / scene.intrinsics.fx() * kWallDepth;
}

SyntheticScene static_camera(std::size_t frames, std::uint64_t seed) {
  SyntheticScene s = base_scene("static", seed);
  s.trajectory.assign(frames, camera_at(Eigen::Vector3d::Zero()));
  return s;
}

SyntheticScene lateral_pan(std::size_t frames, double step, std::uint64_t seed) {
  SyntheticScene s = base_scene("lateral_pan", seed);
  const double w = view_width(s);
  for (std::size_t k = 0; k < frames; ++k) {
    s.trajectory.push_back(camera_at({static_cast<double>(k) * step * w, 0.0, 0.0}));
  }
  return s;
}

SyntheticScene yaw_pan(std::size_t frames, double degrees, std::uint64_t seed) {
  SyntheticScene s = base_scene("yaw_pan", seed);
  for (std::size_t k = 0; k < frames; ++k) {
    s.trajectory.push_back(
        camera_at(Eigen::Vector3d::Zero(), static_cast<double>(k) * degrees * std::numbers::pi / 180.0));
  }
  return s;
}

SyntheticScene abrupt_cut(std::size_t first, std::size_t second, std::uint64_t seed) {
  SyntheticScene s = base_scene("abrupt_cut", seed);
  s.planes.push_back(wall(-kWallDepth, splitmix(seed + 17)));
  s.trajectory.assign(first, camera_at(Eigen::Vector3d::Zero()));
  s.trajectory.insert(s.trajectory.end(), second,
                      camera_at(Eigen::Vector3d::Zero(), std::numbers::pi));
  return s;
}

SyntheticScene hot_spot(const HotSpotLayout& layout, std::uint64_t seed) {
  SyntheticScene s = base_scene("hot_spot", seed);
  const double w = view_width(s);
  s.trajectory.assign(layout.dwell_before, camera_at(Eigen::Vector3d::Zero()));
  for (std::size_t k = 1; k <= layout.transition; ++k) {
    s.trajectory.push_back(camera_at({static_cast<double>(k) * layout.step * w, 0.0, 0.0}));
  }
  const double end = static_cast<double>(layout.transition + 1) * layout.step * w;
  s.trajectory.insert(s.trajectory.end(), layout.dwell_after, camera_at({end, 0.0, 0.0}));
  return s;
}

SyntheticScene skewed_walk(std::uint64_t seed) {
  SyntheticScene s = base_scene("skewed_walk", splitmix(seed));
  const double w = view_width(s);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> spots(3, 4);
  std::uniform_int_distribution<int> dwell(60, 100);
  std::uniform_int_distribution<int> walk(12, 18);
  std::uniform_real_distribution<double> speed(0.06, 0.09);
  std::normal_distribution<double> jitter(0.0, 0.002 * w);
  const int n_spots = spots(rng);
  double x = 0.0;
  for (int h = 0; h < n_spots; ++h) {
    if (h > 0) {
      const int frames = walk(rng);
      const double v = speed(rng) * w;
      for (int k = 0; k < frames; ++k) {
        x += v;
        s.trajectory.push_back(camera_at({x, 0.0, 0.0}));
      }
      x += v;
    }
    const int frames = dwell(rng);
    for (int k = 0; k < frames; ++k) {
      s.trajectory.push_back(camera_at({x + jitter(rng), jitter(rng), 0.0}));
    }
  }
  return s;
}

SyntheticScene object_flyby(std::size_t frames, double total_shift, std::uint64_t seed) {
  SyntheticScene s = base_scene("object_flyby", seed);
  TexturedPlane obj;
  obj.origin = {0.0, 0.0, 1.5};
  obj.half_u = 0.25;
  obj.half_v = 0.25;
  obj.texture_seed = splitmix(seed + 99);
  obj.texel = 0.015;
  obj.object_id = 1;
  s.planes.push_back(obj);
  for (std::size_t k = 0; k < frames; ++k) {
    const double f = frames > 1 ? static_cast<double>(k) / static_cast<double>(frames - 1) : 0.0;
    s.trajectory.push_back(camera_at({f * total_shift, 0.0, 0.0}));
  }
  return s;
}

}  // namespace presets

using nlohmann::json;

namespace {

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw SchemaError(path, "expected 3 numbers");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw SchemaError(path + "/" + std::to_string(i), "expected number");
    v[i] = j[i].get<double>();
  }
  return v;
}

template <typename T>
T field(const json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) throw SchemaError(path + "/" + key, "missing field");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(path + "/" + key, e.what());
  }
}

}  // namespace

std::string format_scene_json(const SyntheticScene& scene) {
  json j;
  j["name"] = scene.name;
  j["fps"] = scene.fps;
  const auto params = scene.intrinsics.params();
  j["camera"] = {{"model", camera_model_name(scene.intrinsics.model())},
                 {"width", scene.width()},
                 {"height", scene.height()},
                 {"params", std::vector<double>(params.begin(), params.end())}};
  j["planes"] = json::array();
  for (const auto& p : scene.planes) {
    j["planes"].push_back({{"origin", vec_json(p.origin)},
                           {"u_axis", vec_json(p.u_axis)},
                           {"v_axis", vec_json(p.v_axis)},
                           {"half_u", p.half_u},
                           {"half_v", p.half_v},
                           {"texture_seed", p.texture_seed},
                           {"texel", p.texel},
                           {"octaves", p.octaves},
                           {"object_id", p.object_id}});
  }
  j["trajectory"] = json::array();
  for (const auto& pose : scene.trajectory) {
    const auto& q = pose.rotation();
    const auto& t = pose.translation();
    j["trajectory"].push_back({q.w(), q.x(), q.y(), q.z(), t.x(), t.y(), t.z()});
  }
  return j.dump(2) + "\n";
}

SyntheticScene parse_scene_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", e.what());
  }
  if (!j.is_object()) throw SchemaError("", "expected an object");
  SyntheticScene s;
  s.name = j.value("name", std::string("scene"));
  s.fps = j.value("fps", 50.0);
  if (!j.contains("camera")) throw SchemaError("/camera", "missing field");
  const json& cam = j["camera"];
  s.intrinsics = CameraIntrinsics(parse_camera_model(field<std::string>(cam, "model", "/camera")),
                                  field<int>(cam, "width", "/camera"),
                                  field<int>(cam, "height", "/camera"),
                                  field<std::vector<double>>(cam, "params", "/camera"));
  const json planes = j.value("planes", json::array());
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const std::string path = "/planes/" + std::to_string(i);
    const json& pj = planes[i];
    TexturedPlane p;
    p.origin = vec_from(pj.value("origin", json()), path + "/origin");
    p.u_axis = vec_from(pj.value("u_axis", json()), path + "/u_axis");
    p.v_axis = vec_from(pj.value("v_axis", json()), path + "/v_axis");
    p.half_u = field<double>(pj, "half_u", path);
    p.half_v = field<double>(pj, "half_v", path);
    p.texture_seed = field<std::uint64_t>(pj, "texture_seed", path);
    p.texel = field<double>(pj, "texel", path);
    p.octaves = field<int>(pj, "octaves", path);
    p.object_id = pj.value("object_id", 0);
    s.planes.push_back(p);
  }
  const json traj = j.value("trajectory", json::array());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const std::string path = "/trajectory/" + std::to_string(i);
    const auto v = traj[i].get<std::vector<double>>();
    if (v.size() != 7) throw SchemaError(path, "expected [qw,qx,qy,qz,tx,ty,tz]");
    const Eigen::Quaterniond q(v[0], v[1], v[2], v[3]);
    if (std::abs(q.norm() - 1.0) > 1e-6) throw SchemaError(path, "quaternion is not unit");
    s.trajectory.emplace_back(q, Eigen::Vector3d(v[4], v[5], v[6]));
  }
  s.validate();
  return s;
}

SyntheticScene read_scene_json(const std::filesystem::path& path) {
  return parse_scene_json(read_text_file(path));
}

void write_scene_json(const SyntheticScene& scene, const std::filesystem::path& path) {
  atomic_write(path, format_scene_json(scene));
}

}  // namespace egofields
