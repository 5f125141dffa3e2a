#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "egofields/mask.h"
#include "egofields/pipeline.h"
#include "egofields/reconstruction.h"

namespace egofields {

// ---- Train/val/test split -------------------------------------------------

struct ActionSegment {
  std::string video_id;
  double start = 0.0;  // seconds, inclusive
  double stop = 0.0;   // seconds, exclusive
  std::string verb;
};

// CSV with header video_id,start_sec,stop_sec,verb. Throws ParseError.
std::vector<ActionSegment> parse_segments_csv(const std::string& text,
                                              const std::string& source = "<segments>");
std::vector<ActionSegment> read_segments_csv(const std::filesystem::path& path);

struct SplitConfig {
  std::set<std::string> hard_verbs{"put", "take", "cut"};
  double exclusion_window = 1.0;  // seconds
  double easy_fraction = 0.30;    // of sampled out-of-action eval frames
  // Share of out-of-action frames that enter evaluation. No default: the
  // source protocol leaves it open, so callers must choose.
  std::optional<double> ooa_eval_rate;
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidArgument
};

enum class SplitLabel {
  kTrain,
  kValHard,
  kTestHard,
  kValMedium,
  kTestMedium,
  kValEasy,
  kTestEasy,
  kDiscarded
};
std::string_view split_label_name(SplitLabel label);
SplitLabel parse_split_label(std::string_view name);
bool is_eval_label(SplitLabel label);
// Hard and medium eval frames push training frames away; easy ones do not.
bool imposes_exclusion(SplitLabel label);

struct SplitEntry {
  std::string frame;
  double timestamp = 0.0;
  SplitLabel label = SplitLabel::kTrain;
};

struct SplitAssignment {
  std::vector<SplitEntry> entries;  // temporal order
  std::vector<std::string> warnings;

  std::map<SplitLabel, std::size_t> counts() const;
  // Mean time between consecutive evaluation frames; nullopt with < 2.
  std::optional<double> mean_eval_gap() const;
  std::string to_csv() const;  // frame_name,label
};

// Pass visor_frames to restrict hard frames to those with mask annotations.
SplitAssignment generate_split(const std::vector<RegisteredFrame>& frames,
                               const std::vector<ActionSegment>& segments,
                               const std::optional<std::set<std::string>>& visor_frames,
                               const SplitConfig& config);

// ---- Dynamic-object mask variants ----------------------------------------

struct ObjectAnnotation {
  int object_id = 0;
  BinaryMask mask;
  std::optional<bool> contact;    // being moved by a visible hand now
  std::optional<bool> moved;      // moved earlier in the video
  std::optional<bool> body_part;  // hands, arms
};

struct FrameAnnotation {
  std::string frame;
  int width = 0;
  int height = 0;
  std::vector<ObjectAnnotation> objects;
};

struct UdosMasks {
  std::string frame;
  BinaryMask dynamic;               // A: in contact
  BinaryMask dynamic_semi_static;   // B: A plus previously moved
  BinaryMask without_body_parts;    // C: B minus body parts
  std::vector<int> ids_a, ids_b, ids_c;
};

struct UdosVariants {
  std::vector<UdosMasks> frames;
  std::vector<std::string> warnings;  // frames skipped for missing flags
};

UdosVariants udos_mask_variants(const std::vector<FrameAnnotation>& annotations);

// {"frames": [{"frame", "width", "height", "objects": [{"id", "mask",
// "contact", "moved", "body_part"}]}]}; mask paths are relative to the file.
std::vector<FrameAnnotation> read_annotations_json(const std::filesystem::path& path);

// ---- Reconstruction statistics -------------------------------------------

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

struct ReconSummary {
  std::string name;
  std::size_t registered = 0;
  std::size_t total = 0;
  double registration_rate = 0.0;
  bool accepted = false;
  std::size_t points = 0;
  std::optional<double> mean_reprojection_error;
  std::optional<double> max_reprojection_error;
};

// 36 bins of 10 degrees centred on -180, -170, ..., 170.
struct OrientationHistogram {
  std::string name;
  std::vector<std::size_t> pitch, yaw, roll;
};

struct ReconStats {
  std::vector<ReconSummary> recons;
  double accept_threshold = 0.70;
  std::size_t below_threshold = 0;
  std::vector<HistogramBin> registration_histogram;  // 20 bins over [0, 1]
  std::vector<HistogramBin> point_histogram;         // decades: [0,10), [10,100), ...
  std::vector<OrientationHistogram> orientations;

  std::string summary_csv() const;
  std::string orientation_csv() const;  // name,axis,bin_center_deg,count,log_count
  std::string to_json() const;
};

struct NamedReconstruction {
  std::string name;
  const Reconstruction* recon = nullptr;
};

ReconStats reconstruction_stats(const std::vector<NamedReconstruction>& recons,
                                const VerifyConfig& verify = {});

// Bin index of an angle in degrees for the 10-degree orientation histogram.
std::size_t orientation_bin(double degrees);

// ---- Filter value study --------------------------------------------------

struct StudyArm {
  std::string sampler;
  std::size_t kept = 0;  // frames given to the sparse stage on the final attempt
  std::size_t points = 0;
  std::optional<double> reprojection_error;
  double registration_rate = 0.0;
  bool success = false;
  int attempts = 0;
};

struct FilteringStudy {
  StudyArm ours;
  StudyArm uniform;
  std::optional<double> points_change;  // (uniform - ours) / ours
  std::optional<double> error_change;

  std::string to_table() const;
  std::string to_json() const;
};

// (uniform - ours) / ours; nullopt when ours is zero.
std::optional<double> relative_change(double uniform, double ours);

// Runs the pipeline twice: with the homography filter (or `ours`), then with
// uniform sampling of as many frames as our final attempt kept. Each arm
// works in its own subdirectory of config.workdir.
FilteringStudy filtering_study(const FrameSource& frames, SfmBackend& backend,
                               const OrchestrateConfig& config, const FilterStep& ours = nullptr);

}  // namespace egofields
