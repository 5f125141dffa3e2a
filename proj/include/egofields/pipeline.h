#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "egofields/filtering.h"
#include "egofields/frame_source.h"
#include "egofields/reconstruction.h"

namespace egofields {

struct VerifyConfig {
  double accept_threshold = 0.70;  // inclusive
  void validate() const;
};

struct VerifyResult {
  bool accept = false;
  double registration_rate = 0.0;
  std::size_t registered = 0;
  std::size_t total = 0;
};

// registration_rate = registered / total; accept iff rate >= threshold.
VerifyResult verify(const Reconstruction& recon, const VerifyConfig& config = {});
VerifyResult verify_counts(std::size_t registered, std::size_t total,
                           const VerifyConfig& config = {});

// Attempt 1: filtered -> sparse_done -> dense_done -> accepted | refiltered
// Attempt 2: refiltered -> sparse_done -> dense_done -> accepted | rejected
enum class Stage { kFiltered, kSparseDone, kDenseDone, kAccepted, kRefiltered, kRejected };

std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);

struct StageEvent {
  Stage stage = Stage::kFiltered;
  int attempt = 1;
  double threshold = 0.0;
  std::optional<double> registration_rate;
  std::string time;  // UTC, ISO 8601
};

struct PipelineState {
  Stage stage = Stage::kFiltered;
  int attempt = 1;
  double registration_rate = 0.0;
  std::vector<double> thresholds;  // overlap threshold used by each attempt
  std::vector<StageEvent> history;

  bool terminal() const { return stage == Stage::kAccepted || stage == Stage::kRejected; }
  // "filtered@0.90"-style label for the filtering stages, stage_name otherwise.
  std::string label() const;
};

// Initial state after the first filtering pass.
PipelineState start_pipeline(double threshold);
// Applies one legal transition; illegal transitions throw InvalidArgument.
PipelineState advance(const PipelineState& state, Stage next,
                      std::optional<double> threshold = std::nullopt,
                      std::optional<double> rate = std::nullopt);
// Outcome of verification at dense_done: accepted, refiltered or rejected.
Stage verdict(const PipelineState& state, const VerifyResult& result);

std::string format_state_json(const PipelineState& state);
PipelineState parse_state_json(const std::string& text);

struct StageContext {
  int attempt = 1;
  std::filesystem::path dir;  // per-attempt scratch directory
};

// Off-the-shelf SfM behind a model-file contract.
class SfmBackend {
 public:
  virtual ~SfmBackend() = default;
  // Sparse model from the kept frames only.
  virtual Reconstruction sparse(const FrameSource& frames, std::span<const std::size_t> kept,
                                const StageContext& ctx) = 0;
  // Registers every frame of the video against the sparse model in
  // `sparse_model` (COLMAP text directory).
  virtual Reconstruction register_frames(const FrameSource& frames,
                                         const std::filesystem::path& sparse_model,
                                         const StageContext& ctx) = 0;
};

// Command templates. Placeholders (substituted shell-quoted):
//   {image_dir} {output_dir} {input_model} {camera_model} {attempt} {workdir}
// sfm_cmd writes a COLMAP text model for the images in {image_dir} into
// {output_dir}; register_cmd registers all frames in {image_dir} against
// {input_model} and writes the result to {output_dir}.
struct SfmCommands {
  std::string sfm_cmd;
  std::string register_cmd;
  std::string camera_model = "SIMPLE_RADIAL";
  std::chrono::seconds timeout{6 * 3600};
};

class ExternalSfmBackend : public SfmBackend {
 public:
  explicit ExternalSfmBackend(SfmCommands commands) : commands_(std::move(commands)) {}
  Reconstruction sparse(const FrameSource& frames, std::span<const std::size_t> kept,
                        const StageContext& ctx) override;
  Reconstruction register_frames(const FrameSource& frames,
                                 const std::filesystem::path& sparse_model,
                                 const StageContext& ctx) override;

 private:
  SfmCommands commands_;
};

// Links (or, for in-memory sources, writes as PNG) the selected frames into
// `dir` under their frame names.
void materialize_frames(const FrameSource& frames, std::span<const std::size_t> indices,
                        const std::filesystem::path& dir);

struct OrchestrateConfig {
  FilterConfig filter;
  VerifyConfig verify;
  std::filesystem::path workdir;
  unsigned threads = 1;
};

struct OrchestrateResult {
  PipelineState state;
  Reconstruction recon;  // dense model of the final attempt
  std::vector<FilterResult> filters;  // one per attempt that ran in this call
};

// Overrides the filter pass (tests, precomputed filters). Receives the
// overlap threshold of the current attempt.
using FilterStep = std::function<FilterResult(double threshold)>;

// filter -> sparse SfM on kept frames -> register all frames -> verify, with
// one restart at filter.restart_threshold on rejection. State is persisted
// to <workdir>/state.json after every stage; re-running with the same
// workdir resumes after the last completed stage.
OrchestrateResult orchestrate(const FrameSource& frames, SfmBackend& backend,
                              const OrchestrateConfig& config,
                              const FilterStep& filter_step = nullptr);

// EGOFIELDS_WORKDIR when set, otherwise `fallback`.
std::filesystem::path resolve_workdir(const std::filesystem::path& fallback);

}  // namespace egofields
