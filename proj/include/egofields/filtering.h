#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "egofields/features.h"
#include "egofields/frame_source.h"
#include "egofields/overlap.h"

namespace egofields {

enum class OnFrameError { kAbort, kSkip };

struct FilterConfig {
  double overlap_threshold = 0.9;
  // Used by the pipeline for the second attempt after a rejection.
  double restart_threshold = 0.95;
  std::size_t min_matches = 20;
  std::size_t max_window = 3000;  // frames
  RansacConfig ransac;
  MatchConfig matching;
  FeatureConfig features;
  std::size_t frame_stride = 1;
  OnFrameError on_error = OnFrameError::kAbort;

  // Throws InvalidArgument unless 0 < overlap <= restart <= 1, stride >= 1
  // and max_window >= 1.
  void validate() const;
  FilterConfig with_threshold(double threshold) const;
};

struct Window {
  std::size_t anchor = 0;
  std::size_t length = 0;  // frames anchor .. anchor + length - 1
  friend bool operator==(const Window&, const Window&) = default;
};

struct PairRecord {
  std::size_t anchor = 0;
  std::size_t candidate = 0;
  double r_tilde = 0.0;
  std::size_t inliers = 0;
};

struct FilterResult {
  std::vector<std::size_t> kept;  // strictly increasing
  std::vector<Window> windows;    // contiguous, disjoint, covering [0, total)
  std::vector<PairRecord> pair_log;
  std::vector<std::size_t> skipped;  // unreadable frames (skip mode only)
  std::size_t total = 0;
  double discard_rate = 0.0;  // 1 - kept / total
};

// Overlap between an anchor frame and a later candidate. May throw
// FrameReadError naming the unreadable frame.
using OverlapFn = std::function<OverlapScore(std::size_t anchor, std::size_t candidate)>;

// Greedy windowing over frames 0..frame_count-1: starting from anchor i, the
// window extends over i+s, i+2s, ... (s = frame_stride) while the overlap to
// i stays >= overlap_threshold and the window is shorter than max_window.
// The first failing candidate j becomes the next anchor; the window (i..j-1)
// keeps only its anchor.
FilterResult greedy_filter(std::size_t frame_count, const OverlapFn& overlap,
                           const FilterConfig& config);

// Per-frame features, computed once per frame and cached by the filter.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual FeatureSet features(std::size_t index) const = 0;
};

// Extracts features from the frame images.
class ExtractingFeatureProvider : public FeatureProvider {
 public:
  ExtractingFeatureProvider(const FrameSource& frames, FeatureConfig config)
      : frames_(frames), config_(config) {}
  FeatureSet features(std::size_t index) const override;

 private:
  const FrameSource& frames_;
  FeatureConfig config_;
};

// Reads precomputed `<frame stem>.feat` records (see write_feature_file).
class FileFeatureProvider : public FeatureProvider {
 public:
  FileFeatureProvider(const FrameSource& frames, std::filesystem::path dir)
      : frames_(frames), dir_(std::move(dir)) {}
  FeatureSet features(std::size_t index) const override;

 private:
  const FrameSource& frames_;
  std::filesystem::path dir_;
};

// Feature-based filter. `threads` > 1 prefetches features for upcoming
// candidates on worker threads; the scan itself is sequential.
FilterResult filter_frames(const FrameSource& frames, const FilterConfig& config,
                           unsigned threads = 1);
FilterResult filter_frames(const FrameSource& frames, const FeatureProvider& features,
                           const FilterConfig& config, unsigned threads = 1);

// Baseline: min(kept_count, N) frames at floor(i * N / kept_count). Equals
// every (N / kept_count)-th frame when the division is exact.
FilterResult compare_uniform(std::size_t frame_count, std::size_t kept_count);

// Deterministic per-pair RANSAC seed derived from the base seed.
std::uint64_t pair_seed(std::uint64_t base, std::size_t anchor, std::size_t candidate);

}  // namespace egofields
