#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cli/commands.h"
#include "cli/settings.h"
#include "egofields/error.h"
#include "egofields/io_util.h"

namespace {

using egofields::cli::ojson;
namespace fs = std::filesystem;
namespace cli = egofields::cli;

constexpr int kExitOther = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitExternal = 4;
constexpr int kExitLift = 5;

// Flags that shadow a config key; applied only when given on the command line
// and only for the subcommand that was actually parsed.
class ConfigFlags {
 public:
  template <typename T>
  void add(CLI::App* app, const std::string& name, const std::string& key,
           const std::string& help) {
    auto value = std::make_shared<std::optional<T>>();
    app->add_option(name, *value, fmt::format("{} [config: {}]", help, key));
    apply_.push_back([app, value, key](ojson& config) {
      if (app->parsed() && value->has_value()) cli::set_key(config, key, ojson(**value));
    });
  }
  void apply(ojson& config) const {
    for (const auto& f : apply_) f(config);
  }

 private:
  std::vector<std::function<void(ojson&)>> apply_;
};

int report_error(const std::string& type, const std::exception& e, int code, ojson extra = {}) {
  ojson err = {{"type", type}, {"message", e.what()}, {"exit_code", code}};
  if (extra.is_object()) err.update(extra);
  std::cerr << ojson{{"error", err}}.dump() << "\n";
  return code;
}

void add_sfm_options(CLI::App* sub, cli::SfmOverrides& o, ConfigFlags& flags) {
  sub->add_option("--sfm-cmd", o.sfm_cmd,
                  "Sparse SfM command template with {image_dir} {output_dir} {camera_model}; "
                  "falls back to EGOFIELDS_SFM_CMD, then the config");
  sub->add_option("--register-cmd", o.register_cmd,
                  "Registration command template with {image_dir} {input_model} {output_dir}; "
                  "falls back to EGOFIELDS_REGISTER_CMD, then the config");
  flags.add<long long>(sub, "--timeout", "sfm.timeout_s", "External tool timeout, seconds");
  flags.add<std::string>(sub, "--camera-model", "sfm.camera_model", "Camera model for SfM");
  flags.add<double>(sub, "--threshold", "filter.overlap_threshold", "Overlap threshold");
  flags.add<double>(sub, "--restart-threshold", "filter.restart_threshold",
                    "Overlap threshold of the restart attempt");
  flags.add<double>(sub, "--accept", "verify.accept_threshold", "Registration rate to accept");
}

std::string reference_markdown(CLI::App& app) {
  std::string md = "# egofields command reference\n\n";
  md += "Global flags precede or follow the subcommand. Flags override the --config file, which "
        "overrides the defaults below.\n\n```\n" + app.help() + "```\n\n";
  md += "## Default configuration\n\n```json\n" + cli::default_config().dump(2) + "\n```\n";
  std::function<void(CLI::App*, const std::string&)> walk = [&](CLI::App* sub,
                                                               const std::string& prefix) {
    const std::string name = prefix.empty() ? sub->get_name() : prefix + " " + sub->get_name();
    md += "\n## " + name + "\n\n" + sub->get_description() + "\n\n```\n" + sub->help() + "```\n";
    for (CLI::App* child : sub->get_subcommands({})) walk(child, name);
  };
  for (CLI::App* sub : app.get_subcommands({})) walk(sub, "");
  return md;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frame filtering, reconstruction bookkeeping, mask propagation and benchmark "
               "tooling for egocentric video",
               "egofields"};
  app.fallthrough();
  app.require_subcommand(0, 1);
  ConfigFlags flags;

  std::optional<fs::path> config_path;
  bool print_config = false;
  app.add_option("--config", config_path, "JSON config file; unknown keys are rejected")
      ->check(CLI::ExistingFile);
  app.add_flag("--print-config", print_config, "Print the effective configuration and exit");
  flags.add<std::uint64_t>(&app, "--seed", "seed", "Seed for every random choice");
  flags.add<unsigned>(&app, "--threads", "threads", "Worker threads (default: available cores)");
  flags.add<double>(&app, "--fps", "fps", "Frame rate for directory sources and name timestamps");

  // filter
  cli::FilterOptions filter_opts;
  auto* filter = app.add_subcommand("filter", "Keep frames whose overlap with the last kept frame "
                                              "drops below the threshold");
  filter->add_option("frames", filter_opts.frames, "Frame directory or manifest")->required();
  filter->add_option("-o,--output", filter_opts.output, "Kept frame names, one per line")
      ->required();
  flags.add<double>(filter, "--threshold", "filter.overlap_threshold", "Overlap threshold");
  flags.add<std::size_t>(filter, "--stride", "filter.frame_stride", "Candidate frame stride");
  flags.add<std::size_t>(filter, "--max-window", "filter.max_window", "Longest window, frames");
  flags.add<std::string>(filter, "--on-error", "filter.on_error",
                         "Unreadable frames: abort or skip");

  // reconstruct
  cli::ReconstructOptions recon_opts;
  auto* reconstruct = app.add_subcommand(
      "reconstruct", "Filter, sparse SfM, register all frames and verify, with one restart");
  reconstruct->add_option("frames", recon_opts.frames, "Frame directory or manifest")->required();
  reconstruct->add_option("-w,--workdir", recon_opts.workdir,
                          "Work directory; falls back to EGOFIELDS_WORKDIR, then the config");
  add_sfm_options(reconstruct, recon_opts.sfm, flags);

  // verify
  cli::VerifyOptions verify_opts;
  auto* verify = app.add_subcommand("verify", "Registration rate check of a model");
  verify->add_option("model", verify_opts.model, "COLMAP text directory or JSON model")
      ->required();
  verify->add_option("--total", verify_opts.total,
                     "Frames in the video (default: the model's frame count)");
  flags.add<double>(verify, "--threshold", "verify.accept_threshold", "Rate to accept");

  // convert
  cli::ConvertOptions convert_opts;
  auto* convert = app.add_subcommand("convert", "Convert between COLMAP text and JSON models");
  convert->add_option("input", convert_opts.input, "COLMAP directory or JSON file")->required();
  convert->add_option("-o,--output", convert_opts.output, "Output path")->required();
  convert->add_option("--to", convert_opts.to, "Target format (default: the other one)")
      ->check(CLI::IsMember({"colmap", "json"}));

  // propagate
  cli::PropagateOptions prop_opts;
  auto* propagate = app.add_subcommand("propagate", "Carry a reference mask to every frame");
  propagate->add_option("mode", prop_opts.mode, "fixed2d or fixed3d")
      ->required()
      ->check(CLI::IsMember({"fixed2d", "fixed3d"}));
  propagate->add_option("--model", prop_opts.model, "Model with poses and points")->required();
  propagate->add_option("--ref-frame", prop_opts.ref_frame, "Frame the mask belongs to")
      ->required();
  propagate->add_option("--mask", prop_opts.mask, "Reference mask raster")->required();
  propagate->add_option("--object-id", prop_opts.object_id, "Object label")->capture_default_str();
  propagate->add_option("-o,--output", prop_opts.output, "Output directory")->required();
  propagate->add_option("--frames", prop_opts.frames, "Frame directory, needed for overlays");
  propagate->add_flag("--overlays", prop_opts.overlays, "Write tinted overlays to overlays/");
  flags.add<int>(propagate, "--splat-radius", "propagation.splat_radius", "Splat radius, px");
  flags.add<int>(propagate, "--sample-stride", "propagation.sample_stride",
                 "Mask sampling stride, px");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Benchmark metrics");
  evaluate->require_subcommand(1);
  cli::EvaluateOptions eval_opts;
  auto* vos = evaluate->add_subcommand("vos", "J, F and J&F of predicted masks");
  vos->add_option("--pred", eval_opts.pred, "Predicted mask directory")->required();
  vos->add_option("--gt", eval_opts.gt,
                  "Ground-truth mask directory, or a rendered scene holding masks/obj<id>")
      ->required();
  vos->add_option("--object-id", eval_opts.object_id, "Object label")->capture_default_str();
  vos->add_option("--tolerance", eval_opts.tolerance,
                  "Boundary tolerance, px (default: 0.8% of the diagonal)");
  auto* nvs = evaluate->add_subcommand("nvs", "PSNR of rendered views");
  nvs->add_option("--pred", eval_opts.pred, "Rendered image directory")->required();
  nvs->add_option("--gt", eval_opts.gt, "Ground-truth image directory")->required();
  nvs->add_option("--masks", eval_opts.masks, "Foreground masks for PSNR_BG and PSNR_FG");
  auto* udos = evaluate->add_subcommand("udos", "Pixel mAP of dynamic-object scores");
  udos->add_option("--pred", eval_opts.pred, "Score map directory, <frame stem>.png")->required();
  udos->add_option("--annotations", eval_opts.annotations, "Annotation JSON")->required();
  for (auto* sub : {vos, nvs, udos}) {
    sub->add_option("-o,--output", eval_opts.output, "Directory for metrics.csv and summary.json");
  }

  // split
  cli::SplitOptions split_opts;
  auto* split = app.add_subcommand("split", "Assign frames to train and evaluation splits");
  split->add_option("--model", split_opts.model, "Model listing the registered frames")
      ->required();
  split->add_option("--segments", split_opts.segments,
                    "Action segments CSV: video_id,start,stop,verb")
      ->required();
  split->add_option("--video", split_opts.video, "Keep only segments of this video");
  split->add_option("--visor", split_opts.visor, "Frames with mask annotations, one per line");
  split->add_option("-o,--output", split_opts.output, "Split CSV")->required();
  flags.add<double>(split, "--ooa-rate", "split.ooa_eval_rate",
                    "Fraction of out-of-action frames to evaluate (required)");
  flags.add<double>(split, "--easy-fraction", "split.easy_fraction",
                    "Share of evaluated out-of-action frames marked easy");
  flags.add<double>(split, "--exclusion-window", "split.exclusion_window",
                    "Train frames this close to a hard or medium frame are discarded, seconds");

  // stats
  cli::StatsOptions stats_opts;
  auto* stats = app.add_subcommand("stats", "Summary tables and histograms over models");
  stats->add_option("models", stats_opts.models, "Models")->required();
  stats->add_option("-o,--output", stats_opts.output, "Output directory")->required();
  stats->add_option("--totals", stats_opts.totals,
                    "Frames per source video, one per model (default: registered count)");
  flags.add<double>(stats, "--threshold", "verify.accept_threshold", "Rate to accept");

  // study-filtering
  cli::StudyOptions study_opts;
  auto* study = app.add_subcommand("study-filtering",
                                   "Overlap filter against uniform sampling of as many frames");
  study->add_option("frames", study_opts.frames, "Frame directory or manifest")->required();
  study->add_option("-w,--workdir", study_opts.workdir,
                    "Work directory; falls back to EGOFIELDS_WORKDIR, then the config");
  study->add_option("-o,--output", study_opts.output, "Directory for study.md and study.json")
      ->required();
  add_sfm_options(study, study_opts.sfm, flags);

  // render
  cli::RenderOptions render_opts;
  auto* render = app.add_subcommand("render", "Render a synthetic scene with its exact model");
  render->add_option("--preset", render_opts.preset, "Scene preset")
      ->required()
      ->check(CLI::IsMember({"static", "lateral", "yaw", "cut", "hotspot", "skewed", "flyby"}));
  render->add_option("--frames", render_opts.frames, "Frame count")->capture_default_str();
  render->add_option("--step", render_opts.step, "lateral: view widths per frame")
      ->capture_default_str();
  render->add_option("--degrees", render_opts.degrees, "yaw: degrees per frame")
      ->capture_default_str();
  render->add_option("--shift", render_opts.shift, "flyby: total shift, world units")
      ->capture_default_str();
  render->add_option("--points", render_opts.points, "Surface points sampled for the model")
      ->capture_default_str();
  render->add_option("-o,--output", render_opts.output, "Output directory")->required();

  // reference
  std::optional<fs::path> reference_out;
  auto* reference = app.add_subcommand("reference", "Write this command reference as markdown");
  reference->add_option("-o,--output", reference_out, "File to write (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e, kExitUsage);
  }

  try {
    ojson config = cli::default_config();
    if (config_path) config = cli::merge_config_file(config, *config_path);
    flags.apply(config);
    if (print_config) {
      fmt::print("{}\n", config.dump(2));
      return 0;
    }
    cli::Context ctx{config, std::vector<std::string>(argv, argv + argc)};

    if (filter->parsed()) return cli::run_filter(ctx, filter_opts);
    if (reconstruct->parsed()) return cli::run_reconstruct(ctx, recon_opts);
    if (verify->parsed()) return cli::run_verify(ctx, verify_opts);
    if (convert->parsed()) return cli::run_convert(ctx, convert_opts);
    if (propagate->parsed()) return cli::run_propagate(ctx, prop_opts);
    if (evaluate->parsed()) {
      eval_opts.task = vos->parsed() ? "vos" : nvs->parsed() ? "nvs" : "udos";
      return cli::run_evaluate(ctx, eval_opts);
    }
    if (split->parsed()) return cli::run_split(ctx, split_opts);
    if (stats->parsed()) return cli::run_stats(ctx, stats_opts);
    if (study->parsed()) return cli::run_study(ctx, study_opts);
    if (render->parsed()) return cli::run_render(ctx, render_opts);
    if (reference->parsed()) {
      const std::string md = reference_markdown(app);
      if (reference_out) {
        egofields::atomic_write(*reference_out, md);
      } else {
        fmt::print("{}", md);
      }
      return 0;
    }
    std::cerr << app.help();
    return kExitUsage;
  } catch (const egofields::ParseError& e) {
    return report_error("ParseError", e, kExitInput, {{"line", e.line()}});
  } catch (const egofields::SchemaError& e) {
    return report_error("SchemaError", e, kExitInput, {{"path", e.path()}});
  } catch (const egofields::FrameReadError& e) {
    return report_error("FrameReadError", e, kExitInput, {{"frame_index", e.index()}});
  } catch (const egofields::UnsupportedCameraModel& e) {
    return report_error("UnsupportedCameraModel", e, kExitInput);
  } catch (const egofields::InvalidArgument& e) {
    return report_error("InvalidArgument", e, kExitInput);
  } catch (const egofields::ExternalToolError& e) {
    return report_error("ExternalToolError", e, kExitExternal,
                        {{"tool_exit_code", e.exit_code()}, {"stderr", e.stderr_text()}});
  } catch (const egofields::LiftFailure& e) {
    return report_error("LiftFailure", e, kExitLift);
  } catch (const egofields::Error& e) {
    return report_error("Error", e, kExitOther);
  } catch (const std::exception& e) {
    return report_error("InternalError", e, kExitOther);
  }
}
