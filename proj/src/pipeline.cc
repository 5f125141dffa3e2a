#include "egofields/pipeline.h"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "egofields/colmap_text.h"
#include "egofields/error.h"
#include "egofields/io_util.h"
#include "egofields/subprocess.h"

namespace egofields {
namespace {

using nlohmann::json;

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool legal(const PipelineState& s, Stage next) {
  switch (s.stage) {
    case Stage::kFiltered:
    case Stage::kRefiltered:
      return next == Stage::kSparseDone;
    case Stage::kSparseDone:
      return next == Stage::kDenseDone;
    case Stage::kDenseDone:
      if (next == Stage::kAccepted) return true;
      return s.attempt == 1 ? next == Stage::kRefiltered : next == Stage::kRejected;
    case Stage::kAccepted:
    case Stage::kRejected:
      return false;
  }
  return false;
}

std::filesystem::path attempt_dir(const std::filesystem::path& workdir, int attempt) {
  return workdir / fmt::format("attempt{}", attempt);
}

void write_kept(const FrameSource& frames, const FilterResult& r,
                const std::filesystem::path& path) {
  std::string out;
  for (auto i : r.kept) out += fmt::format("{} {}\n", i, frames.info(i).name);
  atomic_write(path, out);
}

std::vector<std::size_t> read_kept(const std::filesystem::path& path) {
  std::vector<std::size_t> kept;
  std::istringstream in(read_text_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t idx;
    if (!(ls >> idx)) throw ParseError(path.string(), line_no, "expected '<index> <name>'");
    kept.push_back(idx);
  }
  return kept;
}

void persist(const PipelineState& state, const std::filesystem::path& workdir) {
  atomic_write(workdir / "state.json", format_state_json(state));
}

}  // namespace

void VerifyConfig::validate() const {
  if (!(accept_threshold > 0.0) || accept_threshold > 1.0) {
    throw InvalidArgument("accept_threshold must be in (0, 1]");
  }
}

VerifyResult verify_counts(std::size_t registered, std::size_t total, const VerifyConfig& config) {
  config.validate();
  if (total == 0) throw InvalidArgument("verify needs total_frame_count > 0");
  VerifyResult r;
  r.registered = registered;
  r.total = total;
  r.registration_rate = static_cast<double>(registered) / static_cast<double>(total);
  r.accept = r.registration_rate >= config.accept_threshold;
  return r;
}

VerifyResult verify(const Reconstruction& recon, const VerifyConfig& config) {
  return verify_counts(recon.registered_count(), recon.total_frame_count, config);
}

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kFiltered:
      return "filtered";
    case Stage::kSparseDone:
      return "sparse_done";
    case Stage::kDenseDone:
      return "dense_done";
    case Stage::kAccepted:
      return "accepted";
    case Stage::kRefiltered:
      return "refiltered";
    case Stage::kRejected:
      return "rejected";
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::kFiltered, Stage::kSparseDone, Stage::kDenseDone, Stage::kAccepted,
                  Stage::kRefiltered, Stage::kRejected}) {
    if (stage_name(s) == name) return s;
  }
  throw InvalidArgument("unknown pipeline stage '" + std::string(name) + "'");
}

std::string PipelineState::label() const {
  if ((stage == Stage::kFiltered || stage == Stage::kRefiltered) && !thresholds.empty()) {
    return fmt::format("{}@{:.2f}", stage_name(stage), thresholds.back());
  }
  return std::string(stage_name(stage));
}

PipelineState start_pipeline(double threshold) {
  PipelineState s;
  s.stage = Stage::kFiltered;
  s.attempt = 1;
  s.thresholds = {threshold};
  s.history.push_back({Stage::kFiltered, 1, threshold, std::nullopt, utc_now()});
  return s;
}

PipelineState advance(const PipelineState& state, Stage next, std::optional<double> threshold,
                      std::optional<double> rate) {
  if (!legal(state, next)) {
    throw InvalidArgument(fmt::format("illegal pipeline transition {} -> {} at attempt {}",
                                      stage_name(state.stage), stage_name(next), state.attempt));
  }
  PipelineState s = state;
  s.stage = next;
  if (next == Stage::kRefiltered) {
    if (!threshold) throw InvalidArgument("refiltering needs a threshold");
    s.attempt = 2;
    s.thresholds.push_back(*threshold);
  }
  if (rate) s.registration_rate = *rate;
  s.history.push_back({next, s.attempt, s.thresholds.empty() ? 0.0 : s.thresholds.back(), rate,
                       utc_now()});
  return s;
}

Stage verdict(const PipelineState& state, const VerifyResult& result) {
  if (state.stage != Stage::kDenseDone) {
    throw InvalidArgument("verdict requires the dense_done stage");
  }
  if (result.accept) return Stage::kAccepted;
  return state.attempt == 1 ? Stage::kRefiltered : Stage::kRejected;
}

std::string format_state_json(const PipelineState& state) {
  json doc;
  doc["stage"] = std::string(stage_name(state.stage));
  doc["label"] = state.label();
  doc["attempt"] = state.attempt;
  doc["registration_rate"] = state.registration_rate;
  doc["thresholds"] = state.thresholds;
  json history = json::array();
  for (const auto& e : state.history) {
    json ev = {{"stage", std::string(stage_name(e.stage))},
               {"attempt", e.attempt},
               {"threshold", e.threshold},
               {"time", e.time}};
    ev["registration_rate"] = e.registration_rate ? json(*e.registration_rate) : json(nullptr);
    history.push_back(std::move(ev));
  }
  doc["history"] = std::move(history);
  return doc.dump(2) + "\n";
}

PipelineState parse_state_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    PipelineState s;
    s.stage = parse_stage(doc.at("stage").get<std::string>());
    s.attempt = doc.at("attempt").get<int>();
    s.registration_rate = doc.at("registration_rate").get<double>();
    s.thresholds = doc.at("thresholds").get<std::vector<double>>();
    for (const auto& ev : doc.at("history")) {
      StageEvent e;
      e.stage = parse_stage(ev.at("stage").get<std::string>());
      e.attempt = ev.at("attempt").get<int>();
      e.threshold = ev.at("threshold").get<double>();
      e.time = ev.at("time").get<std::string>();
      if (!ev.at("registration_rate").is_null()) {
        e.registration_rate = ev.at("registration_rate").get<double>();
      }
      s.history.push_back(std::move(e));
    }
    if (s.attempt != 1 && s.attempt != 2) throw InvalidArgument("attempt must be 1 or 2");
    return s;
  } catch (const json::exception& e) {
    throw SchemaError("", std::string("invalid pipeline state: ") + e.what());
  }
}

void materialize_frames(const FrameSource& frames, std::span<const std::size_t> indices,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (auto i : indices) {
    const auto target = dir / frames.info(i).name;
    if (std::filesystem::exists(std::filesystem::symlink_status(target))) continue;
    if (auto src = frame_path(frames, i)) {
      std::filesystem::create_symlink(std::filesystem::absolute(*src), target);
    } else {
      auto png = target;
      if (png.extension() != ".png") png += ".png";
      if (!cv::imwrite(png.string(), frames.load(i))) {
        throw Error("cannot write frame " + png.string());
      }
    }
  }
}

Reconstruction ExternalSfmBackend::sparse(const FrameSource& frames,
                                          std::span<const std::size_t> kept,
                                          const StageContext& ctx) {
  const auto images = ctx.dir / "images";
  const auto output = ctx.dir / "sparse";
  materialize_frames(frames, kept, images);
  std::filesystem::create_directories(output);
  const std::string cmd = expand_command(
      commands_.sfm_cmd, {{"image_dir", images.string()},
                          {"output_dir", output.string()},
                          {"input_model", ""},
                          {"camera_model", commands_.camera_model},
                          {"attempt", std::to_string(ctx.attempt)},
                          {"workdir", ctx.dir.string()}});
  run_command(cmd, commands_.timeout, ctx.dir / "logs" / "sparse");
  return read_colmap_text(output);
}

Reconstruction ExternalSfmBackend::register_frames(const FrameSource& frames,
                                                   const std::filesystem::path& sparse_model,
                                                   const StageContext& ctx) {
  const auto images = ctx.dir.parent_path() / "all_images";
  std::vector<std::size_t> all(frames.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  materialize_frames(frames, all, images);
  const auto output = ctx.dir / "dense";
  std::filesystem::create_directories(output);
  const std::string cmd = expand_command(
      commands_.register_cmd, {{"image_dir", images.string()},
                               {"output_dir", output.string()},
                               {"input_model", sparse_model.string()},
                               {"camera_model", commands_.camera_model},
                               {"attempt", std::to_string(ctx.attempt)},
                               {"workdir", ctx.dir.string()}});
  run_command(cmd, commands_.timeout, ctx.dir / "logs" / "register");
  return read_colmap_text(output);
}

std::filesystem::path resolve_workdir(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("EGOFIELDS_WORKDIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return fallback;
}

OrchestrateResult orchestrate(const FrameSource& frames, SfmBackend& backend,
                              const OrchestrateConfig& config, const FilterStep& filter_step) {
  config.filter.validate();
  config.verify.validate();
  if (frames.size() == 0) throw InvalidArgument("video has no frames");
  if (config.workdir.empty()) throw InvalidArgument("orchestrate needs a workdir");
  std::filesystem::create_directories(config.workdir);

  OrchestrateResult result;
  auto run_filter = [&](int attempt, double threshold) {
    FilterResult fr = filter_step ? filter_step(threshold)
                                  : filter_frames(frames, config.filter.with_threshold(threshold),
                                                  config.threads);
    write_kept(frames, fr, attempt_dir(config.workdir, attempt) / "kept.txt");
    result.filters.push_back(std::move(fr));
  };

  const auto state_path = config.workdir / "state.json";
  PipelineState state;
  if (std::filesystem::exists(state_path)) {
    state = parse_state_json(read_text_file(state_path));
  } else {
    run_filter(1, config.filter.overlap_threshold);
    state = start_pipeline(config.filter.overlap_threshold);
    persist(state, config.workdir);
  }

  while (!state.terminal()) {
    const auto dir = attempt_dir(config.workdir, state.attempt);
    const StageContext ctx{state.attempt, dir};
    switch (state.stage) {
      case Stage::kFiltered:
      case Stage::kRefiltered: {
        const auto kept = read_kept(dir / "kept.txt");
        const Reconstruction sparse = backend.sparse(frames, kept, ctx);
        write_colmap_text(sparse, dir / "sparse");
        state = advance(state, Stage::kSparseDone);
        break;
      }
      case Stage::kSparseDone: {
        Reconstruction dense = backend.register_frames(frames, dir / "sparse", ctx);
        write_colmap_text(dense, dir / "dense");
        state = advance(state, Stage::kDenseDone);
        break;
      }
      case Stage::kDenseDone: {
        Reconstruction dense = read_colmap_text(dir / "dense");
        dense.total_frame_count = frames.size();
        const VerifyResult vr = verify(dense, config.verify);
        const Stage next = verdict(state, vr);
        if (next == Stage::kRefiltered) {
          run_filter(2, config.filter.restart_threshold);
          state = advance(state, next, config.filter.restart_threshold, vr.registration_rate);
        } else {
          state = advance(state, next, std::nullopt, vr.registration_rate);
        }
        break;
      }
      default:
        break;
    }
    persist(state, config.workdir);
  }

  result.recon = read_colmap_text(attempt_dir(config.workdir, state.attempt) / "dense");
  result.recon.total_frame_count = frames.size();
  result.state = std::move(state);
  return result;
}

}  // namespace egofields
