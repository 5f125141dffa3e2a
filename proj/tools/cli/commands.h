#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cli/settings.h"

namespace egofields::cli {

namespace fs = std::filesystem;

// Effective configuration plus the raw command line, shared by every command.
struct Context {
  ojson config;
  std::vector<std::string> argv;

  unsigned threads() const { return config.at("threads").get<unsigned>(); }
  double fps() const { return config.at("fps").get<double>(); }
  std::uint64_t seed() const { return config.at("seed").get<std::uint64_t>(); }
};

struct FilterOptions {
  fs::path frames;
  fs::path output;
};
int run_filter(const Context& ctx, const FilterOptions& o);

// External tool templates resolve as flag > environment > config file.
struct SfmOverrides {
  std::optional<std::string> sfm_cmd;
  std::optional<std::string> register_cmd;
};

struct ReconstructOptions {
  fs::path frames;
  std::optional<fs::path> workdir;
  SfmOverrides sfm;
};
int run_reconstruct(const Context& ctx, const ReconstructOptions& o);

struct VerifyOptions {
  fs::path model;
  std::optional<std::size_t> total;
};
int run_verify(const Context& ctx, const VerifyOptions& o);

struct ConvertOptions {
  fs::path input;
  fs::path output;
  std::string to;  // "colmap" or "json"; empty infers the other format
};
int run_convert(const Context& ctx, const ConvertOptions& o);

struct PropagateOptions {
  std::string mode;  // fixed2d | fixed3d
  fs::path model;
  std::string ref_frame;
  fs::path mask;
  int object_id = 1;
  fs::path output;
  std::optional<fs::path> frames;
  bool overlays = false;
};
int run_propagate(const Context& ctx, const PropagateOptions& o);

struct EvaluateOptions {
  std::string task;  // vos | nvs | udos
  fs::path pred;
  fs::path gt;
  std::optional<fs::path> masks;        // nvs: foreground masks
  std::optional<fs::path> annotations;  // udos
  int object_id = 1;
  std::optional<int> tolerance;
  std::optional<fs::path> output;
};
int run_evaluate(const Context& ctx, const EvaluateOptions& o);

struct SplitOptions {
  fs::path model;
  fs::path segments;
  std::optional<std::string> video;
  std::optional<fs::path> visor;
  fs::path output;
};
int run_split(const Context& ctx, const SplitOptions& o);

struct StatsOptions {
  std::vector<fs::path> models;
  // Frames per source video, aligned with models. Neither model format
  // records unregistered frames, so without this every rate is 1.
  std::vector<std::size_t> totals;
  fs::path output;
};
int run_stats(const Context& ctx, const StatsOptions& o);

struct StudyOptions {
  fs::path frames;
  std::optional<fs::path> workdir;
  SfmOverrides sfm;
  fs::path output;
};
int run_study(const Context& ctx, const StudyOptions& o);

struct RenderOptions {
  std::string preset;
  std::size_t frames = 100;
  double step = 0.02;
  double degrees = 0.5;
  double shift = 1.0;
  std::size_t points = 2000;
  fs::path output;
};
int run_render(const Context& ctx, const RenderOptions& o);

// Reads a COLMAP text directory or a JSON model file.
Reconstruction load_model(const fs::path& path);

// Time of a frame from the trailing number in its name: (n - 1) / fps.
std::optional<double> timestamp_from_name(const std::string& name, double fps);

}  // namespace egofields::cli
