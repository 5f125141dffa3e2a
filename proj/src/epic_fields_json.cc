#include "egofields/epic_fields_json.h"

#include <cmath>

#include <json.hpp>

#include "egofields/error.h"
#include "egofields/io_util.h"

namespace egofields {
namespace {

using nlohmann::json;

std::string escape_pointer_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "/" + key, "missing required key");
  return *it;
}

double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(path, "expected a finite number");
  return d;
}

int positive_int_at(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() <= 0 || v.get<long long>() > INT32_MAX) {
    throw SchemaError(path, "expected a positive integer");
  }
  return static_cast<int>(v.get<long long>());
}

std::vector<double> numbers_at(const json& v, const std::string& path, std::size_t expected) {
  if (!v.is_array()) throw SchemaError(path, "expected an array");
  if (expected != 0 && v.size() != expected) {
    throw SchemaError(path, "expected " + std::to_string(expected) + " numbers, got " +
                                std::to_string(v.size()));
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number_at(v[i], path + "/" + std::to_string(i)));
  }
  return out;
}

}  // namespace

Reconstruction parse_epic_fields_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("", "top-level value must be an object");

  Reconstruction recon;
  const json& cam = require(doc, "camera", "");
  const json& model = require(cam, "model", "/camera");
  if (!model.is_string()) throw SchemaError("/camera/model", "expected a string");
  CameraModel m;
  try {
    m = parse_camera_model(model.get<std::string>());
  } catch (const UnsupportedCameraModel& e) {
    throw SchemaError("/camera/model", e.what());
  }
  const int width = positive_int_at(require(cam, "width", "/camera"), "/camera/width");
  const int height = positive_int_at(require(cam, "height", "/camera"), "/camera/height");
  auto params =
      numbers_at(require(cam, "params", "/camera"), "/camera/params", camera_model_num_params(m));
  try {
    recon.intrinsics.emplace(1, CameraIntrinsics(m, width, height, std::move(params)));
  } catch (const InvalidArgument& e) {
    throw SchemaError("/camera", e.what());
  }

  const json& images = require(doc, "images", "");
  if (!images.is_object()) throw SchemaError("/images", "expected an object");
  ImageId next_id = 1;
  // nlohmann::json objects iterate in key order.
  for (const auto& [name, value] : images.items()) {
    const std::string path = "/images/" + escape_pointer_token(name);
    const auto v = numbers_at(value, path, 7);
    const Eigen::Quaterniond q(v[0], v[1], v[2], v[3]);
    if (std::abs(q.norm() - 1.0) > 1e-6) {
      throw SchemaError(path, "quaternion norm deviates from 1 by more than 1e-6");
    }
    RegisteredFrame frame;
    frame.name = name;
    frame.camera_id = 1;
    frame.image_id = next_id++;
    frame.pose = RigidPose(q, Eigen::Vector3d(v[4], v[5], v[6]));
    recon.frames.push_back(std::move(frame));
  }

  const json& points = require(doc, "points", "");
  if (!points.is_array()) throw SchemaError("/points", "expected an array");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto v = numbers_at(points[i], "/points/" + std::to_string(i), 3);
    SparsePoint p;
    p.id = i + 1;
    p.position = {v[0], v[1], v[2]};
    recon.points.push_back(std::move(p));
  }
  recon.total_frame_count = recon.frames.size();
  return recon;
}

Reconstruction read_epic_fields_json(const std::filesystem::path& path) {
  try {
    return parse_epic_fields_json(read_text_file(path));
  } catch (const SchemaError& e) {
    throw SchemaError(e.path(), path.string() + ": " +
                                    std::string(e.what()).substr(e.path().size() + 2));
  }
}

std::string format_epic_fields_json(const Reconstruction& recon) {
  if (recon.intrinsics.size() != 1) {
    throw InvalidArgument("EPIC Fields JSON holds exactly one camera, reconstruction has " +
                          std::to_string(recon.intrinsics.size()));
  }
  const CameraIntrinsics& cam = recon.intrinsics.begin()->second;
  json doc;
  doc["camera"] = {{"model", std::string(camera_model_name(cam.model()))},
                   {"width", cam.width()},
                   {"height", cam.height()},
                   {"params", std::vector<double>(cam.params().begin(), cam.params().end())}};
  json images = json::object();
  for (const auto& f : recon.frames) {
    const auto& q = f.pose.rotation();
    const auto& t = f.pose.translation();
    if (images.contains(f.name)) throw InvalidArgument("duplicate frame name '" + f.name + "'");
    images[f.name] = {q.w(), q.x(), q.y(), q.z(), t.x(), t.y(), t.z()};
  }
  doc["images"] = std::move(images);
  json points = json::array();
  for (const auto& p : recon.points) {
    points.push_back({p.position.x(), p.position.y(), p.position.z()});
  }
  doc["points"] = std::move(points);
  return doc.dump() + "\n";
}

void write_epic_fields_json(const Reconstruction& recon, const std::filesystem::path& path) {
  atomic_write(path, format_epic_fields_json(recon));
}

}  // namespace egofields
