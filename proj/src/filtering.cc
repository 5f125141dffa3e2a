#include "egofields/filtering.h"

#include <algorithm>
#include <future>
#include <map>
#include <mutex>

#include "egofields/error.h"

namespace egofields {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

FilterResult finish(FilterResult r) {
  r.discard_rate =
      r.total == 0 ? 0.0
                   : 1.0 - static_cast<double>(r.kept.size()) / static_cast<double>(r.total);
  return r;
}

// Features keyed by frame index. Frames ahead of the scan are computed on
// worker threads when prefetching is enabled.
class FeatureCache {
 public:
  FeatureCache(const FeatureProvider& provider, std::size_t total, std::size_t stride,
               unsigned threads)
      : provider_(provider), total_(total), stride_(stride), depth_(threads > 1 ? threads - 1 : 0) {}

  const FeatureSet& get(std::size_t index) {
    auto it = entries_.find(index);
    if (it == entries_.end()) {
      it = entries_.emplace(index, launch(index, std::launch::deferred)).first;
    }
    for (std::size_t k = 1; k <= depth_; ++k) {
      const std::size_t ahead = index + k * stride_;
      if (ahead >= total_) break;
      if (!entries_.contains(ahead)) entries_.emplace(ahead, launch(ahead, std::launch::async));
    }
    return it->second.get();
  }

  // Drops everything before `anchor` except the anchor itself.
  void evict_before(std::size_t anchor) {
    entries_.erase(entries_.begin(), entries_.lower_bound(anchor));
  }

 private:
  std::shared_future<FeatureSet> launch(std::size_t index, std::launch policy) {
    return std::async(policy, [this, index] { return provider_.features(index); }).share();
  }

  const FeatureProvider& provider_;
  std::size_t total_;
  std::size_t stride_;
  std::size_t depth_;
  std::map<std::size_t, std::shared_future<FeatureSet>> entries_;
};

}  // namespace

void FilterConfig::validate() const {
  if (!(overlap_threshold > 0.0) || overlap_threshold > restart_threshold ||
      restart_threshold > 1.0) {
    throw InvalidArgument("filter thresholds must satisfy 0 < overlap <= restart <= 1");
  }
  if (frame_stride < 1) throw InvalidArgument("frame_stride must be >= 1");
  if (max_window < 1) throw InvalidArgument("max_window must be >= 1");
}

FilterConfig FilterConfig::with_threshold(double threshold) const {
  FilterConfig c = *this;
  c.overlap_threshold = threshold;
  c.restart_threshold = std::max(c.restart_threshold, threshold);
  return c;
}

std::uint64_t pair_seed(std::uint64_t base, std::size_t anchor, std::size_t candidate) {
  return splitmix64(base ^ splitmix64((static_cast<std::uint64_t>(anchor) << 32) ^
                                      static_cast<std::uint64_t>(candidate)));
}

FilterResult greedy_filter(std::size_t frame_count, const OverlapFn& overlap,
                           const FilterConfig& config) {
  config.validate();
  if (frame_count == 0) throw InvalidArgument("filtering needs at least one frame");
  FilterResult result;
  result.total = frame_count;
  const std::size_t stride = config.frame_stride;

  std::size_t anchor = 0;
  while (anchor < frame_count) {
    std::size_t next = anchor + stride;
    bool anchor_ok = true;
    for (; next < frame_count; next += stride) {
      if (next - anchor >= config.max_window) break;
      OverlapScore score;
      try {
        score = overlap(anchor, next);
      } catch (const FrameReadError& e) {
        if (config.on_error == OnFrameError::kAbort) throw;
        if (e.index() == anchor) {
          anchor_ok = false;
          next = anchor + stride;
          break;
        }
        result.skipped.push_back(e.index());
        continue;
      }
      result.pair_log.push_back({anchor, next, score.r_tilde, score.inlier_count});
      if (score.r_tilde < config.overlap_threshold) break;
    }
    next = std::min(next, frame_count);
    result.windows.push_back({anchor, next - anchor});
    if (anchor_ok) {
      result.kept.push_back(anchor);
    } else {
      result.skipped.push_back(anchor);
    }
    anchor = next;
  }
  std::sort(result.skipped.begin(), result.skipped.end());
  result.skipped.erase(std::unique(result.skipped.begin(), result.skipped.end()),
                       result.skipped.end());
  return finish(std::move(result));
}

FeatureSet ExtractingFeatureProvider::features(std::size_t index) const {
  return detect_and_describe(frames_.load(index), config_);
}

FeatureSet FileFeatureProvider::features(std::size_t index) const {
  const auto name = std::filesystem::path(frames_.info(index).name).stem().string();
  const auto path = dir_ / (name + ".feat");
  try {
    return read_feature_file(path);
  } catch (const Error& e) {
    throw FrameReadError(index, e.what());
  }
}

FilterResult filter_frames(const FrameSource& frames, const FilterConfig& config,
                           unsigned threads) {
  ExtractingFeatureProvider provider(frames, config.features);
  return filter_frames(frames, provider, config, threads);
}

FilterResult filter_frames(const FrameSource& frames, const FeatureProvider& features,
                           const FilterConfig& config, unsigned threads) {
  config.validate();
  if (frames.size() == 0) throw InvalidArgument("filtering needs at least one frame");
  const cv::Size size = frames.frame_size();
  FeatureCache cache(features, frames.size(), config.frame_stride, threads);
  std::size_t current_anchor = 0;

  OverlapConfig oc;
  oc.matching = config.matching;
  oc.ransac = config.ransac;
  oc.min_matches = config.min_matches;

  auto overlap = [&](std::size_t anchor, std::size_t candidate) {
    if (anchor != current_anchor) {
      cache.evict_before(anchor);
      current_anchor = anchor;
    }
    const FeatureSet& a = [&]() -> const FeatureSet& {
      try {
        return cache.get(anchor);
      } catch (const FrameReadError&) {
        throw;
      } catch (const Error& e) {
        throw FrameReadError(anchor, e.what());
      }
    }();
    const FeatureSet& b = [&]() -> const FeatureSet& {
      try {
        return cache.get(candidate);
      } catch (const FrameReadError&) {
        throw;
      } catch (const Error& e) {
        throw FrameReadError(candidate, e.what());
      }
    }();
    OverlapConfig pair_config = oc;
    pair_config.ransac.seed = pair_seed(config.ransac.seed, anchor, candidate);
    return measure_overlap(a, b, size.width, size.height, pair_config);
  };
  return greedy_filter(frames.size(), overlap, config);
}

FilterResult compare_uniform(std::size_t frame_count, std::size_t kept_count) {
  if (kept_count < 1) throw InvalidArgument("kept_count must be >= 1");
  FilterResult result;
  result.total = frame_count;
  if (frame_count == 0) return result;
  const std::size_t k = std::min(kept_count, frame_count);
  // floor(i * N / k): exactly k frames, spaced as evenly as integers allow.
  for (std::size_t i = 0; i < k; ++i) result.kept.push_back(i * frame_count / k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t end = i + 1 < k ? result.kept[i + 1] : frame_count;
    result.windows.push_back({result.kept[i], end - result.kept[i]});
  }
  return finish(std::move(result));
}

}  // namespace egofields
