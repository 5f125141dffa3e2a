#include "egofields/colmap_text.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <string_view>
#include <unordered_map>

#include <fmt/format.h>

#include "egofields/error.h"
#include "egofields/io_util.h"

namespace egofields {
namespace {

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw Error("cannot open " + path.string());
  }

  // Next non-blank, non-comment line.
  bool next_data(std::string& line) {
    while (next_raw(line)) {
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      return true;
    }
    return false;
  }

  bool next_raw(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(path_.string(), line_no_, what);
  }

  template <typename T>
  T number(std::string_view token, const char* field) const {
    T value{};
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end) {
      fail(fmt::format("invalid {} '{}'", field, token));
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(value)) fail(fmt::format("non-finite {}", field));
    }
    return value;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

std::string fmt_real(double v) { return fmt::format("{:.12g}", v); }

void read_cameras(const std::filesystem::path& path, Reconstruction& recon) {
  LineReader reader(path);
  std::string line;
  while (reader.next_data(line)) {
    const auto tok = tokenize(line);
    if (tok.size() < 4) reader.fail("expected CAMERA_ID MODEL WIDTH HEIGHT PARAMS...");
    const auto id = reader.number<CameraId>(tok[0], "CAMERA_ID");
    CameraModel model;
    try {
      model = parse_camera_model(tok[1]);
    } catch (const UnsupportedCameraModel& e) {
      throw UnsupportedCameraModel(fmt::format("{}:{}: {}", path.string(), reader.line_no(),
                                               e.what()));
    }
    const int width = reader.number<int>(tok[2], "WIDTH");
    const int height = reader.number<int>(tok[3], "HEIGHT");
    std::vector<double> params;
    for (std::size_t i = 4; i < tok.size(); ++i) params.push_back(reader.number<double>(tok[i], "PARAM"));
    try {
      if (!recon.intrinsics.emplace(id, CameraIntrinsics(model, width, height, std::move(params)))
               .second) {
        reader.fail(fmt::format("duplicate CAMERA_ID {}", id));
      }
    } catch (const InvalidArgument& e) {
      reader.fail(e.what());
    }
  }
}

void read_images(const std::filesystem::path& path, Reconstruction& recon,
                 std::unordered_map<ImageId, std::size_t>& by_id) {
  LineReader reader(path);
  std::string line;
  while (reader.next_data(line)) {
    const auto tok = tokenize(line);
    if (tok.size() < 10) {
      reader.fail("expected IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME");
    }
    RegisteredFrame frame;
    frame.image_id = reader.number<ImageId>(tok[0], "IMAGE_ID");
    double v[7];
    for (int i = 0; i < 7; ++i) v[i] = reader.number<double>(tok[1 + i], "pose value");
    try {
      frame.pose = RigidPose(Eigen::Quaterniond(v[0], v[1], v[2], v[3]),
                             Eigen::Vector3d(v[4], v[5], v[6]));
    } catch (const InvalidArgument& e) {
      reader.fail(e.what());
    }
    frame.camera_id = reader.number<CameraId>(tok[8], "CAMERA_ID");
    if (!recon.intrinsics.contains(frame.camera_id)) {
      reader.fail(fmt::format("image references unknown CAMERA_ID {}", frame.camera_id));
    }
    // NAME is the remainder of the line, so names may contain spaces.
    const auto name_pos = static_cast<std::size_t>(tok[9].data() - line.data());
    frame.name = std::string(trim(std::string_view(line).substr(name_pos)));

    std::string obs_line;
    if (!reader.next_raw(obs_line)) obs_line.clear();
    const auto obs = tokenize(obs_line);
    if (obs.size() % 3 != 0) reader.fail("POINTS2D must be triples X Y POINT3D_ID");
    for (std::size_t i = 0; i < obs.size(); i += 3) {
      Observation2D o;
      o.xy = {reader.number<double>(obs[i], "X"), reader.number<double>(obs[i + 1], "Y")};
      const auto pid = reader.number<std::int64_t>(obs[i + 2], "POINT3D_ID");
      if (pid < -1) reader.fail("POINT3D_ID must be >= -1");
      if (pid >= 0) o.point_id = static_cast<PointId>(pid);
      frame.points2d.push_back(o);
    }
    if (!by_id.emplace(frame.image_id, recon.frames.size()).second) {
      reader.fail(fmt::format("duplicate IMAGE_ID {}", frame.image_id));
    }
    if (recon.find_frame(frame.name) != nullptr) {
      reader.fail("duplicate image name '" + frame.name + "'");
    }
    recon.frames.push_back(std::move(frame));
  }
}

void read_points(const std::filesystem::path& path, Reconstruction& recon,
                 const std::unordered_map<ImageId, std::size_t>& by_id) {
  LineReader reader(path);
  std::string line;
  std::unordered_map<PointId, std::size_t> seen;
  while (reader.next_data(line)) {
    const auto tok = tokenize(line);
    if (tok.size() < 8 || (tok.size() - 8) % 2 != 0) {
      reader.fail("expected POINT3D_ID X Y Z R G B ERROR (IMAGE_ID POINT2D_IDX)...");
    }
    SparsePoint p;
    p.id = reader.number<PointId>(tok[0], "POINT3D_ID");
    p.position = {reader.number<double>(tok[1], "X"), reader.number<double>(tok[2], "Y"),
                  reader.number<double>(tok[3], "Z")};
    Rgb c;
    c.r = reader.number<std::uint8_t>(tok[4], "R");
    c.g = reader.number<std::uint8_t>(tok[5], "G");
    c.b = reader.number<std::uint8_t>(tok[6], "B");
    p.color = c;
    p.error = reader.number<double>(tok[7], "ERROR");
    if (p.error < 0.0) reader.fail("negative ERROR");
    for (std::size_t i = 8; i < tok.size(); i += 2) {
      const auto image_id = reader.number<ImageId>(tok[i], "IMAGE_ID");
      const auto idx = reader.number<std::size_t>(tok[i + 1], "POINT2D_IDX");
      auto it = by_id.find(image_id);
      if (it == by_id.end()) reader.fail(fmt::format("track references unknown IMAGE_ID {}", image_id));
      const RegisteredFrame& frame = recon.frames[it->second];
      if (idx >= frame.points2d.size()) {
        reader.fail(fmt::format("POINT2D_IDX {} out of range for IMAGE_ID {}", idx, image_id));
      }
      if (frame.points2d[idx].point_id != p.id) {
        reader.fail(fmt::format("IMAGE_ID {} POINT2D_IDX {} does not observe point {}", image_id,
                                idx, p.id));
      }
      p.track.push_back({frame.name, idx, frame.points2d[idx].xy});
    }
    if (!seen.emplace(p.id, recon.points.size()).second) {
      reader.fail(fmt::format("duplicate POINT3D_ID {}", p.id));
    }
    recon.points.push_back(std::move(p));
  }
  // Every triangulated 2D observation must reference a listed point.
  for (const auto& frame : recon.frames) {
    for (const auto& o : frame.points2d) {
      if (o.point_id && !seen.contains(*o.point_id)) {
        throw ParseError(path.string(), 0,
                         fmt::format("image '{}' references missing POINT3D_ID {}", frame.name,
                                     *o.point_id));
      }
    }
  }
}

}  // namespace

Reconstruction read_colmap_text(const std::filesystem::path& dir) {
  Reconstruction recon;
  std::unordered_map<ImageId, std::size_t> by_id;
  read_cameras(dir / "cameras.txt", recon);
  read_images(dir / "images.txt", recon, by_id);
  read_points(dir / "points3D.txt", recon, by_id);
  recon.total_frame_count = recon.frames.size();
  return recon;
}

std::string format_cameras_text(const Reconstruction& recon) {
  std::string out =
      "# Camera list with one line of data per camera:\n"
      "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
  out += fmt::format("# Number of cameras: {}\n", recon.intrinsics.size());
  for (const auto& [id, cam] : recon.intrinsics) {
    out += fmt::format("{} {} {} {}", id, camera_model_name(cam.model()), cam.width(),
                       cam.height());
    for (double p : cam.params()) out += " " + fmt_real(p);
    out += '\n';
  }
  return out;
}

std::string format_images_text(const Reconstruction& recon) {
  std::vector<const RegisteredFrame*> frames;
  std::size_t observations = 0;
  for (const auto& f : recon.frames) {
    frames.push_back(&f);
    for (const auto& o : f.points2d) observations += o.point_id ? 1 : 0;
  }
  std::sort(frames.begin(), frames.end(),
            [](const auto* a, const auto* b) { return a->image_id < b->image_id; });
  const double mean_obs =
      frames.empty() ? 0.0 : static_cast<double>(observations) / static_cast<double>(frames.size());
  std::string out =
      "# Image list with two lines of data per image:\n"
      "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
      "#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
  out += fmt::format("# Number of images: {}, mean observations per image: {}\n", frames.size(),
                     fmt_real(mean_obs));
  for (const auto* f : frames) {
    const auto& q = f->pose.rotation();
    const auto& t = f->pose.translation();
    out += fmt::format("{} {} {} {} {} {} {} {} {} {}\n", f->image_id, fmt_real(q.w()),
                       fmt_real(q.x()), fmt_real(q.y()), fmt_real(q.z()), fmt_real(t.x()),
                       fmt_real(t.y()), fmt_real(t.z()), f->camera_id, f->name);
    std::string obs;
    for (const auto& o : f->points2d) {
      if (!obs.empty()) obs += ' ';
      obs += fmt::format("{} {} {}", fmt_real(o.xy.x()), fmt_real(o.xy.y()),
                         o.point_id ? std::to_string(*o.point_id) : std::string("-1"));
    }
    out += obs + '\n';
  }
  return out;
}

std::string format_points_text(const Reconstruction& recon) {
  std::unordered_map<std::string, ImageId> ids;
  for (const auto& f : recon.frames) ids.emplace(f.name, f.image_id);
  std::vector<const SparsePoint*> points;
  std::size_t track_total = 0;
  for (const auto& p : recon.points) {
    points.push_back(&p);
    track_total += p.track.size();
  }
  std::sort(points.begin(), points.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });
  const double mean_track =
      points.empty() ? 0.0 : static_cast<double>(track_total) / static_cast<double>(points.size());
  std::string out =
      "# 3D point list with one line of data per point:\n"
      "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n";
  out += fmt::format("# Number of points: {}, mean track length: {}\n", points.size(),
                     fmt_real(mean_track));
  for (const auto* p : points) {
    const Rgb c = p->color.value_or(Rgb{});
    out += fmt::format("{} {} {} {} {} {} {} {}", p->id, fmt_real(p->position.x()),
                       fmt_real(p->position.y()), fmt_real(p->position.z()), c.r, c.g, c.b,
                       fmt_real(p->error));
    for (const auto& t : p->track) {
      auto it = ids.find(t.frame);
      if (it == ids.end()) {
        throw InvalidArgument("point " + std::to_string(p->id) + " references unknown frame '" +
                              t.frame + "'");
      }
      out += fmt::format(" {} {}", it->second, t.point2d_idx);
    }
    out += '\n';
  }
  return out;
}

void write_colmap_text(const Reconstruction& recon, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  // Format everything first so a bad model leaves no partial output.
  const std::string cameras = format_cameras_text(recon);
  const std::string images = format_images_text(recon);
  const std::string points = format_points_text(recon);
  atomic_write(dir / "cameras.txt", cameras);
  atomic_write(dir / "images.txt", images);
  atomic_write(dir / "points3D.txt", points);
}

}  // namespace egofields
