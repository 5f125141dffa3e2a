#include "cli/settings.h"

#include <thread>

#include "egofields/error.h"
#include "egofields/io_util.h"

namespace egofields::cli {

ojson default_config() {
  const FilterConfig f;
  const PropagationConfig p;
  const SplitConfig s;
  ojson c;
  c["seed"] = 0;
  c["threads"] = std::max(1u, std::thread::hardware_concurrency());
  c["fps"] = 50.0;
  c["workdir"] = "egofields_work";
  c["filter"] = {
      {"overlap_threshold", f.overlap_threshold},
      {"restart_threshold", f.restart_threshold},
      {"min_matches", f.min_matches},
      {"max_window", f.max_window},
      {"frame_stride", f.frame_stride},
      {"on_error", "abort"},
      {"max_features", f.features.max_features},
      {"contrast_threshold", f.features.contrast_threshold},
      {"ratio", f.matching.ratio},
      {"mutual", f.matching.mutual},
      {"ransac_threshold", f.ransac.inlier_threshold},
      {"ransac_iterations", f.ransac.max_iterations},
      {"ransac_confidence", f.ransac.confidence},
  };
  c["verify"] = {{"accept_threshold", VerifyConfig{}.accept_threshold}};
  c["sfm"] = {{"sfm_cmd", ""},
              {"register_cmd", ""},
              {"camera_model", SfmCommands{}.camera_model},
              {"timeout_s", SfmCommands{}.timeout.count()}};
  c["propagation"] = {{"max_point_error", p.max_point_error},
                      {"min_points", p.min_points},
                      {"plane_inlier_ratio", p.plane_inlier_ratio},
                      {"ransac_iterations", p.ransac_iterations},
                      {"sample_stride", p.sample_stride},
                      {"splat_radius", nullptr},
                      {"visibility_min", p.visibility_min}};
  c["split"] = {{"hard_verbs", s.hard_verbs},
                {"exclusion_window", s.exclusion_window},
                {"easy_fraction", s.easy_fraction},
                {"ooa_eval_rate", nullptr}};
  return c;
}

namespace {

void merge_into(ojson& base, const ojson& patch, const std::string& path) {
  if (!patch.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string p = path + "/" + key;
    if (!base.contains(key)) throw SchemaError(p, "unknown configuration key");
    ojson& slot = base[key];
    if (slot.is_object()) {
      merge_into(slot, value, p);
    } else if (slot.is_null() || value.is_null() || slot.type() == value.type() ||
               (slot.is_number() && value.is_number())) {
      slot = value;
    } else {
      throw SchemaError(p, std::string("expected ") + slot.type_name());
    }
  }
}

template <typename T>
T get(const ojson& c, const char* section, const char* key) {
  try {
    return c.at(section).at(key).get<T>();
  } catch (const ojson::exception& e) {
    throw SchemaError(std::string("/") + section + "/" + key, e.what());
  }
}

}  // namespace

ojson merge_config_file(const ojson& base, const std::filesystem::path& file) {
  ojson patch;
  try {
    patch = ojson::parse(read_text_file(file));
  } catch (const ojson::parse_error& e) {
    throw ParseError(file.string(), 0, e.what());
  }
  ojson out = base;
  merge_into(out, patch, "");
  return out;
}

void set_key(ojson& config, const std::string& dotted, ojson value) {
  ojson* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

FilterConfig filter_config(const ojson& c) {
  FilterConfig f;
  f.overlap_threshold = get<double>(c, "filter", "overlap_threshold");
  f.restart_threshold = get<double>(c, "filter", "restart_threshold");
  f.min_matches = get<std::size_t>(c, "filter", "min_matches");
  f.max_window = get<std::size_t>(c, "filter", "max_window");
  f.frame_stride = get<std::size_t>(c, "filter", "frame_stride");
  const auto on_error = get<std::string>(c, "filter", "on_error");
  if (on_error == "skip") {
    f.on_error = OnFrameError::kSkip;
  } else if (on_error == "abort") {
    f.on_error = OnFrameError::kAbort;
  } else {
    throw SchemaError("/filter/on_error", "expected 'abort' or 'skip'");
  }
  f.features.max_features = get<int>(c, "filter", "max_features");
  f.features.contrast_threshold = get<double>(c, "filter", "contrast_threshold");
  f.matching.ratio = get<double>(c, "filter", "ratio");
  f.matching.mutual = get<bool>(c, "filter", "mutual");
  f.ransac.inlier_threshold = get<double>(c, "filter", "ransac_threshold");
  f.ransac.max_iterations = get<int>(c, "filter", "ransac_iterations");
  f.ransac.confidence = get<double>(c, "filter", "ransac_confidence");
  f.ransac.seed = c.at("seed").get<std::uint64_t>();
  f.validate();
  return f;
}

VerifyConfig verify_config(const ojson& c) {
  VerifyConfig v;
  v.accept_threshold = get<double>(c, "verify", "accept_threshold");
  v.validate();
  return v;
}

SfmCommands sfm_commands(const ojson& c) {
  SfmCommands s;
  s.sfm_cmd = get<std::string>(c, "sfm", "sfm_cmd");
  s.register_cmd = get<std::string>(c, "sfm", "register_cmd");
  s.camera_model = get<std::string>(c, "sfm", "camera_model");
  s.timeout = std::chrono::seconds(get<long long>(c, "sfm", "timeout_s"));
  return s;
}

PropagationConfig propagation_config(const ojson& c) {
  PropagationConfig p;
  p.max_point_error = get<double>(c, "propagation", "max_point_error");
  p.min_points = get<std::size_t>(c, "propagation", "min_points");
  p.plane_inlier_ratio = get<double>(c, "propagation", "plane_inlier_ratio");
  p.ransac_iterations = get<int>(c, "propagation", "ransac_iterations");
  p.sample_stride = get<int>(c, "propagation", "sample_stride");
  if (!c.at("propagation").at("splat_radius").is_null()) {
    p.splat_radius = get<int>(c, "propagation", "splat_radius");
  }
  p.visibility_min = get<double>(c, "propagation", "visibility_min");
  p.seed = c.at("seed").get<std::uint64_t>();
  p.validate();
  return p;
}

SplitConfig split_config(const ojson& c) {
  SplitConfig s;
  s.hard_verbs = get<std::set<std::string>>(c, "split", "hard_verbs");
  s.exclusion_window = get<double>(c, "split", "exclusion_window");
  s.easy_fraction = get<double>(c, "split", "easy_fraction");
  if (!c.at("split").at("ooa_eval_rate").is_null()) {
    s.ooa_eval_rate = get<double>(c, "split", "ooa_eval_rate");
  }
  s.seed = c.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace egofields::cli
