#include "cli/commands.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>

#include "cli/manifest.h"
#include "egofields/benchmark.h"
#include "egofields/colmap_text.h"
#include "egofields/epic_fields_json.h"
#include "egofields/error.h"
#include "egofields/frame_source.h"
#include "egofields/io_util.h"
#include "egofields/mask.h"
#include "egofields/metrics.h"
#include "egofields/pipeline.h"
#include "egofields/propagation.h"
#include "egofields/synthetic.h"

namespace egofields::cli {

namespace {

fs::path dir_of(const fs::path& file) {
  const fs::path p = file.parent_path();
  return p.empty() ? fs::path(".") : p;
}

ojson with_options(const Context& ctx, ojson options) {
  ojson c = ctx.config;
  c["options"] = std::move(options);
  return c;
}

bool up_to_date(const RunManifest& m, const fs::path& dir) {
  if (!m.up_to_date(dir)) return false;
  fmt::print(stderr, "up to date: {}\n", dir.string());
  return true;
}

std::string stem_of(const std::string& frame_name) {
  return fs::path(frame_name).stem().string();
}

bool is_raster(const fs::path& p) {
  static const std::set<std::string> kExt = {".png", ".jpg", ".jpeg", ".bmp",
                                             ".tif", ".tiff", ".pgm", ".ppm"};
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return kExt.count(ext) > 0;
}

std::vector<std::string> list_rasters(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidArgument("not a directory: " + dir.string());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_raster(e.path())) names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw InvalidArgument("no images in " + dir.string());
  return names;
}

cv::Mat read_image(const fs::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw InvalidArgument("cannot read image " + path.string());
  return m;
}

// 8-bit maps are scaled by 1/255, 16-bit by 1/65535; float maps are taken as is.
ScoreMap read_score_map(const fs::path& path) {
  const cv::Mat m = read_image(path);
  if (m.channels() != 1) throw InvalidArgument("score map must be single channel: " + path.string());
  double scale = 1.0;
  if (m.depth() == CV_8U) {
    scale = 1.0 / 255.0;
  } else if (m.depth() == CV_16U) {
    scale = 1.0 / 65535.0;
  } else if (m.depth() != CV_32F && m.depth() != CV_64F) {
    throw InvalidArgument("unsupported score map depth: " + path.string());
  }
  cv::Mat d;
  m.convertTo(d, CV_64F, scale);
  ScoreMap s(d.cols, d.rows);
  for (int y = 0; y < d.rows; ++y) {
    for (int x = 0; x < d.cols; ++x) s.at(x, y) = d.at<double>(y, x);
  }
  s.validate();
  return s;
}

ojson json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

ojson optional_mean(const MetricReport& r, const std::string& metric) {
  if (r.defined_count(metric) == 0) return nullptr;
  return json_number(r.mean(metric));
}

fs::path resolve_workdir_option(const Context& ctx, const std::optional<fs::path>& flag) {
  if (flag) return *flag;
  return resolve_workdir(ctx.config.at("workdir").get<std::string>());
}

SfmCommands resolve_sfm(const Context& ctx, const SfmOverrides& o) {
  SfmCommands s = sfm_commands(ctx.config);
  const auto pick = [](std::string& slot, const std::optional<std::string>& flag, const char* env) {
    if (flag) {
      slot = *flag;
    } else if (const char* v = std::getenv(env); v != nullptr && *v != '\0') {
      slot = v;
    }
  };
  pick(s.sfm_cmd, o.sfm_cmd, "EGOFIELDS_SFM_CMD");
  pick(s.register_cmd, o.register_cmd, "EGOFIELDS_REGISTER_CMD");
  if (s.sfm_cmd.empty()) {
    throw InvalidArgument("no SfM command: pass --sfm-cmd or set EGOFIELDS_SFM_CMD");
  }
  if (s.register_cmd.empty()) {
    throw InvalidArgument("no registration command: pass --register-cmd or set EGOFIELDS_REGISTER_CMD");
  }
  return s;
}

OrchestrateConfig orchestrate_config(const Context& ctx, const fs::path& workdir) {
  OrchestrateConfig oc;
  oc.filter = filter_config(ctx.config);
  oc.verify = verify_config(ctx.config);
  oc.workdir = workdir;
  oc.threads = ctx.threads();
  return oc;
}

}  // namespace

Reconstruction load_model(const fs::path& path) {
  if (fs::is_directory(path)) return read_colmap_text(path);
  if (!fs::exists(path)) throw InvalidArgument("model not found: " + path.string());
  return read_epic_fields_json(path);
}

std::optional<double> timestamp_from_name(const std::string& name, double fps) {
  const std::string stem = stem_of(name);
  std::size_t end = stem.size();
  std::size_t begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
  if (begin == end) return std::nullopt;
  const unsigned long long n = std::stoull(stem.substr(begin, end - begin));
  return n == 0 ? 0.0 : static_cast<double>(n - 1) / fps;
}

int run_filter(const Context& ctx, const FilterOptions& o) {
  const FilterConfig fc = filter_config(ctx.config);
  const fs::path dir = dir_of(o.output);
  RunManifest m("filter", ctx.argv,
                with_options(ctx, {{"frames", o.frames.string()}, {"output", o.output.string()}}));
  m.add_input(o.frames);
  m.add_output(o.output);
  if (up_to_date(m, dir)) return 0;

  const auto source = open_frame_source(o.frames, ctx.fps());
  const FilterResult r = filter_frames(*source, fc, ctx.threads());
  std::string text;
  for (const std::size_t k : r.kept) text += source->info(k).name + "\n";
  fs::create_directories(dir);
  atomic_write(o.output, text);
  m.write(dir);
  fmt::print(stderr, "kept {}/{} frames, discard rate {:.3f}\n", r.kept.size(), r.total,
             r.discard_rate);
  return 0;
}

int run_reconstruct(const Context& ctx, const ReconstructOptions& o) {
  const fs::path workdir = resolve_workdir_option(ctx, o.workdir);
  const SfmCommands commands = resolve_sfm(ctx, o.sfm);
  ojson opts = {{"frames", o.frames.string()},
                {"workdir", workdir.string()},
                {"sfm_cmd", commands.sfm_cmd},
                {"register_cmd", commands.register_cmd}};
  RunManifest m("reconstruct", ctx.argv, with_options(ctx, opts));
  m.add_input(o.frames);
  m.add_output(workdir / "result.json");
  if (up_to_date(m, workdir)) return 0;

  const auto source = open_frame_source(o.frames, ctx.fps());
  ExternalSfmBackend backend(commands);
  const OrchestrateResult r = orchestrate(*source, backend, orchestrate_config(ctx, workdir));
  const fs::path model = workdir / fmt::format("attempt{}", r.state.attempt) / "dense";
  ojson result = {{"stage", std::string(stage_name(r.state.stage))},
                  {"attempt", r.state.attempt},
                  {"registration_rate", r.state.registration_rate},
                  {"registered", r.recon.registered_count()},
                  {"total", source->size()},
                  {"model", model.string()}};
  atomic_write(workdir / "result.json", result.dump(2) + "\n");
  m.write(workdir);
  fmt::print("{} attempt {} rate {:.3f} model {}\n", stage_name(r.state.stage), r.state.attempt,
             r.state.registration_rate, model.string());
  return 0;
}

int run_verify(const Context& ctx, const VerifyOptions& o) {
  const Reconstruction r = load_model(o.model);
  const std::size_t total = o.total.value_or(r.total_frame_count);
  const VerifyResult v = verify_counts(r.registered_count(), total, verify_config(ctx.config));
  fmt::print("registered {}/{} rate {:.3f} {}\n", v.registered, v.total, v.registration_rate,
             v.accept ? "accept" : "reject");
  return 0;
}

int run_convert(const Context& ctx, const ConvertOptions& o) {
  const bool from_colmap = fs::is_directory(o.input);
  const std::string to = o.to.empty() ? (from_colmap ? "json" : "colmap") : o.to;
  const fs::path dir = to == "colmap" ? o.output : dir_of(o.output);
  const ojson opts = {{"input", o.input.string()}, {"output", o.output.string()}, {"to", to}};
  RunManifest m("convert", ctx.argv, with_options(ctx, opts));
  m.add_input(o.input);
  m.add_output(o.output);
  if (up_to_date(m, dir)) return 0;

  const Reconstruction r = load_model(o.input);
  if (to == "colmap") {
    write_colmap_text(r, o.output);
  } else {
    fs::create_directories(dir);
    write_epic_fields_json(r, o.output);
  }
  m.write(dir);
  return 0;
}

int run_propagate(const Context& ctx, const PropagateOptions& o) {
  if (o.overlays && !o.frames) throw InvalidArgument("--overlays needs --frames");
  const PropagationConfig pc = propagation_config(ctx.config);
  ojson opts = {{"mode", o.mode},           {"model", o.model.string()},
                {"ref_frame", o.ref_frame}, {"mask", o.mask.string()},
                {"object_id", o.object_id}, {"output", o.output.string()},
                {"overlays", o.overlays}};
  if (o.frames) opts["frames"] = o.frames->string();
  RunManifest m("propagate", ctx.argv, with_options(ctx, opts));
  m.add_input(o.model);
  m.add_input(o.mask);
  if (o.overlays) m.add_input(*o.frames);
  m.add_output(o.output / "visibility.csv");
  if (up_to_date(m, o.output)) return 0;

  const Reconstruction r = load_model(o.model);
  const RegisteredFrame* ref = r.find_frame(o.ref_frame);
  if (ref == nullptr) throw InvalidArgument("reference frame not in model: " + o.ref_frame);
  const CameraIntrinsics& ref_cam = r.camera_for(*ref);
  const BinaryMask ref_mask = read_mask(o.mask, o.object_id);
  if (ref_mask.width != ref_cam.width() || ref_mask.height != ref_cam.height()) {
    throw InvalidArgument(fmt::format("mask is {}x{} but the reference camera is {}x{}",
                                      ref_mask.width, ref_mask.height, ref_cam.width(),
                                      ref_cam.height()));
  }

  std::optional<LiftedObject> object;
  ojson lift = {{"mode", o.mode}, {"object_id", o.object_id}, {"ref_frame", o.ref_frame}};
  if (o.mode == "fixed3d") {
    object = lift_mask(ref_mask, *ref, ref_cam, r.points, pc);
    object->object_id = o.object_id;
    lift["anchor_points"] = object->anchor_points.size();
    lift["samples"] = object->mask_samples.size();
    lift["fallback"] = object->uses_fallback();
    if (object->plane) {
      const auto& n = object->plane->normal;
      lift["plane"] = {{"normal", {n.x(), n.y(), n.z()}}, {"offset", object->plane->offset}};
      lift["plane_inliers"] = object->plane_inliers;
    } else {
      lift["constant_depth"] = object->constant_depth;
    }
  } else if (o.mode != "fixed2d") {
    throw InvalidArgument("mode must be fixed2d or fixed3d: " + o.mode);
  }

  fs::create_directories(o.output);
  if (o.overlays) fs::create_directories(o.output / "overlays");
  std::string visibility = "frame,visible,in_view_fraction\n";
  for (std::size_t i = 0; i < r.frames.size(); ++i) {
    const RegisteredFrame& f = r.frames[i];
    BinaryMask mask;
    bool visible = true;
    double fraction = 1.0;
    if (object) {
      Reprojection rp = reproject_object(*object, f, r.camera_for(f), pc);
      mask = std::move(rp.mask);
      visible = rp.visible;
      fraction = rp.in_view_fraction;
    } else {
      mask = ref_mask;
    }
    mask.object_id = o.object_id;
    const std::string stem = stem_of(f.name);
    write_mask(mask, o.output / (stem + ".png"));
    visibility += fmt::format("{},{},{}\n", f.name, visible ? 1 : 0, format_metric_value(fraction));
    if (o.overlays) {
      const cv::Mat image = cv::imread((*o.frames / f.name).string(), cv::IMREAD_GRAYSCALE);
      if (image.empty()) throw FrameReadError(i, "cannot read " + (*o.frames / f.name).string());
      cv::imwrite((o.output / "overlays" / (stem + ".png")).string(), mask_overlay(image, mask));
    }
  }
  atomic_write(o.output / "visibility.csv", visibility);
  atomic_write(o.output / "lift.json", lift.dump(2) + "\n");
  m.write(o.output);
  return 0;
}

namespace {

ojson evaluate_vos(const EvaluateOptions& o, MetricReport& report) {
  fs::path gt_dir = o.gt;
  const fs::path rendered = o.gt / "masks" / fmt::format("obj{}", o.object_id);
  if (fs::is_directory(rendered)) gt_dir = rendered;
  const auto names = list_rasters(gt_dir);
  for (const auto& name : names) {
    const fs::path pred_path = o.pred / name;
    if (!fs::exists(pred_path)) throw InvalidArgument("missing prediction " + pred_path.string());
    const BinaryMask gt = read_mask(gt_dir / name, o.object_id);
    const BinaryMask pred = read_mask(pred_path, o.object_id);
    const double j = jaccard(pred, gt);
    const double f = boundary_f(pred, gt, o.tolerance);
    const std::string frame = fs::path(name).stem().string();
    report.add(frame, "J", j);
    report.add(frame, "F", f);
    report.add(frame, "J&F", jf_mean(j, f));
  }
  return {{"J", report.mean("J")},
          {"F", report.mean("F")},
          {"J&F", report.mean("J&F")},
          {"frames", names.size()}};
}

ojson evaluate_nvs(const EvaluateOptions& o, MetricReport& report) {
  const auto names = list_rasters(o.gt);
  for (const auto& name : names) {
    const cv::Mat gt = read_image(o.gt / name);
    const cv::Mat pred = read_image(o.pred / name);
    const std::string frame = fs::path(name).stem().string();
    if (o.masks) {
      const PsnrSplit s = psnr_split(pred, gt, read_mask(*o.masks / name));
      report.add(frame, "PSNR", s.all);
      report.add(frame, "PSNR_BG", s.bg);
      report.add(frame, "PSNR_FG", s.fg);
    } else {
      report.add(frame, "PSNR", psnr(pred, gt));
    }
  }
  ojson out = {{"PSNR", json_number(report.mean("PSNR"))}};
  if (o.masks) {
    out["PSNR_BG"] = optional_mean(report, "PSNR_BG");
    out["PSNR_FG"] = optional_mean(report, "PSNR_FG");
  }
  out["frames"] = names.size();
  return out;
}

ojson evaluate_udos(const EvaluateOptions& o, MetricReport& report) {
  if (!o.annotations) throw InvalidArgument("udos needs --annotations");
  const UdosVariants v = udos_mask_variants(read_annotations_json(*o.annotations));
  for (const auto& w : v.warnings) fmt::print(stderr, "warning: {}\n", w);
  std::vector<ScoreMap> scores;
  std::vector<BinaryMask> a, b, c;
  for (const UdosMasks& fm : v.frames) {
    scores.push_back(read_score_map(o.pred / (stem_of(fm.frame) + ".png")));
    a.push_back(fm.dynamic);
    b.push_back(fm.dynamic_semi_static);
    c.push_back(fm.without_body_parts);
  }
  ojson out;
  const auto variant = [&](const char* name, const std::vector<BinaryMask>& gt) {
    for (std::size_t i = 0; i < gt.size(); ++i) {
      report.add(v.frames[i].frame, std::string("AP_") + name,
                 gt[i].empty() ? std::optional<double>() : average_precision(scores[i], gt[i]));
    }
    ojson entry;
    if (std::any_of(gt.begin(), gt.end(), [](const BinaryMask& m) { return !m.empty(); })) {
      const MeanApResult r = mean_average_precision(scores, gt);
      entry = {{"mAP", r.map}, {"evaluated", r.evaluated}, {"skipped", r.skipped.size()}};
    } else {
      entry = {{"mAP", nullptr}, {"evaluated", 0}, {"skipped", gt.size()}};
    }
    out[name] = entry;
  };
  variant("dynamic", a);
  variant("dynamic_semi_static", b);
  variant("without_body_parts", c);
  out["frames"] = v.frames.size();
  return out;
}

}  // namespace

int run_evaluate(const Context& ctx, const EvaluateOptions& o) {
  ojson opts = {{"task", o.task}, {"pred", o.pred.string()}, {"gt", o.gt.string()},
                {"object_id", o.object_id}};
  if (o.masks) opts["masks"] = o.masks->string();
  if (o.annotations) opts["annotations"] = o.annotations->string();
  if (o.tolerance) opts["tolerance"] = *o.tolerance;
  RunManifest m("evaluate", ctx.argv, with_options(ctx, opts));
  m.add_input(o.pred);
  if (!o.gt.empty()) m.add_input(o.gt);
  if (o.masks) m.add_input(*o.masks);
  if (o.annotations) m.add_input(*o.annotations);

  MetricReport report;
  ojson out;
  if (o.task == "vos") {
    out = evaluate_vos(o, report);
  } else if (o.task == "nvs") {
    out = evaluate_nvs(o, report);
  } else if (o.task == "udos") {
    out = evaluate_udos(o, report);
  } else {
    throw InvalidArgument("unknown evaluation task: " + o.task);
  }
  fmt::print("{}\n", out.dump(2));
  if (o.output) {
    fs::create_directories(*o.output);
    atomic_write(*o.output / "metrics.csv", report.to_csv());
    atomic_write(*o.output / "summary.json", out.dump(2) + "\n");
    m.add_output(*o.output / "metrics.csv");
    m.add_output(*o.output / "summary.json");
    m.write(*o.output);
  }
  return 0;
}

int run_split(const Context& ctx, const SplitOptions& o) {
  const SplitConfig sc = split_config(ctx.config);
  const fs::path dir = dir_of(o.output);
  ojson opts = {{"model", o.model.string()}, {"segments", o.segments.string()},
                {"output", o.output.string()}};
  if (o.video) opts["video"] = *o.video;
  if (o.visor) opts["visor"] = o.visor->string();
  RunManifest m("split", ctx.argv, with_options(ctx, opts));
  m.add_input(o.model);
  m.add_input(o.segments);
  if (o.visor) m.add_input(*o.visor);
  m.add_output(o.output);
  if (up_to_date(m, dir)) return 0;

  std::vector<RegisteredFrame> frames = load_model(o.model).frames;
  const bool untimed = std::all_of(frames.begin(), frames.end(),
                                   [](const RegisteredFrame& f) { return f.timestamp == 0.0; });
  if (untimed) {
    for (auto& f : frames) {
      const auto t = timestamp_from_name(f.name, ctx.fps());
      if (!t) throw InvalidArgument("cannot derive a timestamp from frame name " + f.name);
      f.timestamp = *t;
    }
  }
  std::vector<ActionSegment> segments = read_segments_csv(o.segments);
  if (o.video) {
    std::erase_if(segments, [&](const ActionSegment& s) { return s.video_id != *o.video; });
  }
  std::optional<std::set<std::string>> visor;
  if (o.visor) {
    visor.emplace();
    std::istringstream in(read_text_file(*o.visor));
    for (std::string line; std::getline(in, line);) {
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
      if (!line.empty() && line.front() != '#') visor->insert(line);
    }
  }
  const SplitAssignment a = generate_split(frames, segments, visor, sc);
  for (const auto& w : a.warnings) fmt::print(stderr, "warning: {}\n", w);
  fs::create_directories(dir);
  atomic_write(o.output, a.to_csv());
  m.write(dir);
  for (const auto& [label, n] : a.counts()) fmt::print(stderr, "{} {}\n", split_label_name(label), n);
  return 0;
}

int run_stats(const Context& ctx, const StatsOptions& o) {
  ojson paths = ojson::array();
  for (const auto& p : o.models) paths.push_back(p.string());
  if (!o.totals.empty() && o.totals.size() != o.models.size()) {
    throw InvalidArgument(fmt::format("{} totals given for {} models", o.totals.size(),
                                      o.models.size()));
  }
  RunManifest m("stats", ctx.argv, with_options(ctx, {{"models", paths}, {"totals", o.totals}}));
  for (const auto& p : o.models) m.add_input(p);
  for (const char* f : {"stats.csv", "orientation.csv", "stats.json"}) m.add_output(o.output / f);
  if (up_to_date(m, o.output)) return 0;

  std::vector<Reconstruction> recons;
  recons.reserve(o.models.size());
  std::vector<NamedReconstruction> named;
  for (std::size_t i = 0; i < o.models.size(); ++i) {
    const fs::path& p = o.models[i];
    recons.push_back(load_model(p));
    if (!o.totals.empty()) {
      if (o.totals[i] < recons.back().registered_count()) {
        throw InvalidArgument(fmt::format("total {} is below the {} frames registered in {}",
                                          o.totals[i], recons.back().registered_count(),
                                          p.string()));
      }
      recons.back().total_frame_count = o.totals[i];
    }
    const fs::path clean = p.lexically_normal();
    std::string name = (clean.has_filename() ? clean : clean.parent_path()).stem().string();
    named.push_back({std::move(name), &recons.back()});
  }
  const ReconStats s = reconstruction_stats(named, verify_config(ctx.config));
  fs::create_directories(o.output);
  atomic_write(o.output / "stats.csv", s.summary_csv());
  atomic_write(o.output / "orientation.csv", s.orientation_csv());
  atomic_write(o.output / "stats.json", s.to_json());
  m.write(o.output);
  fmt::print(stderr, "{} reconstructions, {} below the acceptance threshold\n", s.recons.size(),
             s.below_threshold);
  return 0;
}

int run_study(const Context& ctx, const StudyOptions& o) {
  const fs::path workdir = resolve_workdir_option(ctx, o.workdir);
  const SfmCommands commands = resolve_sfm(ctx, o.sfm);
  ojson opts = {{"frames", o.frames.string()},
                {"workdir", workdir.string()},
                {"sfm_cmd", commands.sfm_cmd},
                {"register_cmd", commands.register_cmd}};
  RunManifest m("study-filtering", ctx.argv, with_options(ctx, opts));
  m.add_input(o.frames);
  m.add_output(o.output / "study.md");
  m.add_output(o.output / "study.json");
  if (up_to_date(m, o.output)) return 0;

  const auto source = open_frame_source(o.frames, ctx.fps());
  ExternalSfmBackend backend(commands);
  const FilteringStudy s = filtering_study(*source, backend, orchestrate_config(ctx, workdir));
  fs::create_directories(o.output);
  atomic_write(o.output / "study.md", s.to_table());
  atomic_write(o.output / "study.json", s.to_json());
  m.write(o.output);
  fmt::print("{}", s.to_table());
  return 0;
}

int run_render(const Context& ctx, const RenderOptions& o) {
  const std::uint64_t seed = ctx.seed();
  SyntheticScene scene;
  if (o.preset == "static") {
    scene = presets::static_camera(o.frames, seed);
  } else if (o.preset == "lateral") {
    scene = presets::lateral_pan(o.frames, o.step, seed);
  } else if (o.preset == "yaw") {
    scene = presets::yaw_pan(o.frames, o.degrees, seed);
  } else if (o.preset == "cut") {
    scene = presets::abrupt_cut(o.frames / 2, o.frames - o.frames / 2, seed);
  } else if (o.preset == "hotspot") {
    scene = presets::hot_spot({}, seed);
  } else if (o.preset == "skewed") {
    scene = presets::skewed_walk(seed);
  } else if (o.preset == "flyby") {
    scene = presets::object_flyby(o.frames, o.shift, seed);
  } else {
    throw InvalidArgument("unknown preset: " + o.preset);
  }

  ojson opts = {{"preset", o.preset}, {"frames", o.frames}, {"step", o.step},
                {"degrees", o.degrees}, {"shift", o.shift}, {"points", o.points}};
  RunManifest m("render", ctx.argv, with_options(ctx, opts));
  for (const char* f : {"frames", "scene.json", "model", "masks"}) m.add_output(o.output / f);
  if (up_to_date(m, o.output)) return 0;

  fs::create_directories(o.output);
  write_frames(scene, o.output / "frames");
  write_scene_json(scene, o.output / "scene.json");
  const Reconstruction model = scene_reconstruction(scene, sample_surface_points(scene, o.points, seed));
  write_colmap_text(model, o.output / "model");
  std::set<int> ids;
  for (const auto& plane : scene.planes) {
    if (plane.object_id > 0) ids.insert(plane.object_id);
  }
  fs::create_directories(o.output / "masks");
  for (const int id : ids) {
    const fs::path dir = o.output / "masks" / fmt::format("obj{}", id);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < scene.size(); ++i) {
      write_mask(object_mask(scene, i, id), dir / (stem_of(synthetic_frame_name(i)) + ".png"));
    }
  }
  m.write(o.output);
  fmt::print(stderr, "{} frames, {} model points\n", scene.size(), model.points.size());
  return 0;
}

}  // namespace egofields::cli
