#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "egofields/mask.h"

namespace egofields {

// Returned by psnr() when the compared region is error-free.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

// Per-pixel foreground confidence in [0,1], row-major.
struct ScoreMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  ScoreMap() = default;
  ScoreMap(int w, int h, double fill = 0.0);
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  // Throws InvalidArgument for a size mismatch or values outside [0,1].
  void validate() const;
};

// Images are CV_8U (scaled by 1/255) or floating point already in [0,1];
// any channel count, all channels pooled into one MSE. Peak value is 1.
// Throws InvalidArgument on size/type mismatch or an empty region.
double psnr(const cv::Mat& pred, const cv::Mat& gt);
double psnr(const cv::Mat& pred, const cv::Mat& gt, const BinaryMask& region);

struct PsnrSplit {
  double all = 0.0;
  std::optional<double> bg;  // undefined when the mask covers every pixel
  std::optional<double> fg;  // undefined when the mask is empty
};
PsnrSplit psnr_split(const cv::Mat& pred, const cv::Mat& gt, const BinaryMask& fg_mask);

// Pixels are ranked by descending score; equal scores keep row-major order.
// AP = sum over positives of precision-at-rank / #positives.
// Throws InvalidArgument when gt is empty or sizes differ.
double average_precision(const ScoreMap& scores, const BinaryMask& gt);

struct MeanApResult {
  double map = 0.0;
  std::size_t evaluated = 0;
  std::vector<std::size_t> skipped;  // indices of frames with empty ground truth
};
// Per-frame AP averaged over frames with non-empty ground truth. Throws
// InvalidArgument when every frame is empty or the lists differ in length.
MeanApResult mean_average_precision(const std::vector<ScoreMap>& scores,
                                    const std::vector<BinaryMask>& gt);
// AP over all pixels of all frames pooled into one ranking.
double pooled_average_precision(const std::vector<ScoreMap>& scores,
                                const std::vector<BinaryMask>& gt);

// |pred ∩ gt| / |pred ∪ gt|, 1 when both are empty.
double jaccard(const BinaryMask& pred, const BinaryMask& gt);

// Foreground pixels with at least one background 4-neighbour. Neighbours
// outside the image do not count as background.
BinaryMask mask_boundary(const BinaryMask& mask);

// ceil(0.008 * image diagonal).
int default_boundary_tolerance(int width, int height);

struct BoundaryMatch {
  std::size_t pred_boundary = 0;
  std::size_t gt_boundary = 0;
  std::size_t pred_matched = 0;  // pred boundary pixels within tolerance of gt boundary
  std::size_t gt_matched = 0;
  double precision() const;
  double recall() const;
  double f_measure() const;
};
// Pixels match when their Euclidean distance is <= tolerance.
BoundaryMatch boundary_match(const BinaryMask& pred, const BinaryMask& gt, int tolerance);
double boundary_f(const BinaryMask& pred, const BinaryMask& gt,
                  std::optional<int> tolerance = std::nullopt);

inline double jf_mean(double j, double f) { return 0.5 * (j + f); }

// Per-frame metric values with their arithmetic means. Undefined entries are
// counted per metric but excluded from the mean.
class MetricReport {
 public:
  struct Record {
    std::string frame;
    std::string metric;
    std::optional<double> value;
  };

  void add(const std::string& frame, const std::string& metric, std::optional<double> value);
  void merge(const MetricReport& other);

  const std::vector<Record>& records() const { return records_; }
  std::vector<std::string> metrics() const;  // in first-seen order
  // Throws InvalidArgument when the metric has no defined value.
  double mean(const std::string& metric) const;
  std::size_t defined_count(const std::string& metric) const;
  std::size_t undefined_count(const std::string& metric) const;

  // frame,metric,value with empty value for undefined entries and "inf" for +∞.
  std::string to_csv() const;
  // {"means": {...}, "counts": {...}, "undefined": {...}}
  std::string to_json() const;

 private:
  std::vector<Record> records_;
};

// Shared number formatting for reports: 17 significant digits, "inf"/"-inf".
std::string format_metric_value(double v);

}  // namespace egofields
