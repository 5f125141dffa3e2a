#include "egofields/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "egofields/error.h"

namespace egofields {
namespace {

cv::Mat to_unit_double(const cv::Mat& image) {
  cv::Mat out;
  if (image.depth() == CV_8U) {
    image.convertTo(out, CV_64F, 1.0 / 255.0);
  } else if (image.depth() == CV_32F || image.depth() == CV_64F) {
    image.convertTo(out, CV_64F);
  } else {
    throw InvalidArgument("psnr: images must be 8-bit or floating point");
  }
  return out;
}

void check_pair(const cv::Mat& pred, const cv::Mat& gt) {
  if (pred.empty() || gt.empty()) throw InvalidArgument("psnr: empty image");
  if (pred.size() != gt.size() || pred.channels() != gt.channels()) {
    throw InvalidArgument(fmt::format("psnr: size mismatch {}x{}x{} vs {}x{}x{}", pred.cols,
                                      pred.rows, pred.channels(), gt.cols, gt.rows,
                                      gt.channels()));
  }
}

// Sum of squared differences and sample count over pixels where
// include(x, y) holds.
template <typename Pred>
std::pair<double, std::size_t> squared_error(const cv::Mat& pred, const cv::Mat& gt,
                                             Pred include) {
  const cv::Mat a = to_unit_double(pred);
  const cv::Mat b = to_unit_double(gt);
  const int ch = a.channels();
  double sse = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.rows; ++y) {
    const double* pa = a.ptr<double>(y);
    const double* pb = b.ptr<double>(y);
    for (int x = 0; x < a.cols; ++x) {
      if (!include(x, y)) continue;
      for (int c = 0; c < ch; ++c) {
        const double d = pa[x * ch + c] - pb[x * ch + c];
        sse += d * d;
      }
      n += static_cast<std::size_t>(ch);
    }
  }
  return {sse, n};
}

double psnr_from(double sse, std::size_t n) {
  if (n == 0) throw InvalidArgument("psnr: empty region");
  if (sse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(static_cast<double>(n) / sse);
}

void check_mask(const cv::Mat& image, const BinaryMask& mask) {
  if (mask.width != image.cols || mask.height != image.rows) {
    throw InvalidArgument(fmt::format("mask size {}x{} does not match image {}x{}", mask.width,
                                      mask.height, image.cols, image.rows));
  }
}

void check_masks(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_size(b)) {
    throw InvalidArgument(fmt::format("mask size mismatch {}x{} vs {}x{}", a.width, a.height,
                                      b.width, b.height));
  }
}

struct RankedPixel {
  double score;
  bool positive;
};

// Ranked list must already be in final order.
double ap_of_ranking(const std::vector<RankedPixel>& ranked, std::size_t positives) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (!ranked[i].positive) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(positives);
}

void append_ranking(const ScoreMap& scores, const BinaryMask& gt, std::vector<RankedPixel>& out,
                    std::size_t& positives) {
  scores.validate();
  if (scores.width != gt.width || scores.height != gt.height) {
    throw InvalidArgument("average_precision: score map and mask sizes differ");
  }
  for (std::size_t i = 0; i < scores.values.size(); ++i) {
    const bool pos = gt.bits[i] != 0;
    positives += pos ? 1 : 0;
    out.push_back({scores.values[i], pos});
  }
}

void sort_ranking(std::vector<RankedPixel>& r) {
  std::stable_sort(r.begin(), r.end(),
                   [](const RankedPixel& a, const RankedPixel& b) { return a.score > b.score; });
}

}  // namespace

ScoreMap::ScoreMap(int w, int h, double fill)
    : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {
  if (w < 0 || h < 0) throw InvalidArgument("ScoreMap: negative size");
}

void ScoreMap::validate() const {
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("ScoreMap: value count does not match size");
  }
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("ScoreMap: value outside [0,1]");
  }
}

double psnr(const cv::Mat& pred, const cv::Mat& gt) {
  check_pair(pred, gt);
  const auto [sse, n] = squared_error(pred, gt, [](int, int) { return true; });
  return psnr_from(sse, n);
}

double psnr(const cv::Mat& pred, const cv::Mat& gt, const BinaryMask& region) {
  check_pair(pred, gt);
  check_mask(pred, region);
  const auto [sse, n] = squared_error(pred, gt, [&](int x, int y) { return region.at(x, y); });
  return psnr_from(sse, n);
}

PsnrSplit psnr_split(const cv::Mat& pred, const cv::Mat& gt, const BinaryMask& fg_mask) {
  check_pair(pred, gt);
  check_mask(pred, fg_mask);
  const auto [fg_sse, fg_n] =
      squared_error(pred, gt, [&](int x, int y) { return fg_mask.at(x, y); });
  const auto [bg_sse, bg_n] =
      squared_error(pred, gt, [&](int x, int y) { return !fg_mask.at(x, y); });
  PsnrSplit out;
  // Same summation order as the unsplit metric, so both agree to the bit.
  out.all = psnr(pred, gt);
  if (fg_n > 0) out.fg = psnr_from(fg_sse, fg_n);
  if (bg_n > 0) out.bg = psnr_from(bg_sse, bg_n);
  return out;
}

double average_precision(const ScoreMap& scores, const BinaryMask& gt) {
  std::vector<RankedPixel> ranked;
  std::size_t positives = 0;
  append_ranking(scores, gt, ranked, positives);
  if (positives == 0) throw InvalidArgument("average_precision: empty ground truth");
  sort_ranking(ranked);
  return ap_of_ranking(ranked, positives);
}

MeanApResult mean_average_precision(const std::vector<ScoreMap>& scores,
                                    const std::vector<BinaryMask>& gt) {
  if (scores.size() != gt.size()) throw InvalidArgument("mean_average_precision: length mismatch");
  MeanApResult out;
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i].empty()) {
      out.skipped.push_back(i);
      continue;
    }
    sum += average_precision(scores[i], gt[i]);
    ++out.evaluated;
  }
  if (out.evaluated == 0) {
    throw InvalidArgument("mean_average_precision: every frame has empty ground truth");
  }
  out.map = sum / static_cast<double>(out.evaluated);
  return out;
}

double pooled_average_precision(const std::vector<ScoreMap>& scores,
                                const std::vector<BinaryMask>& gt) {
  if (scores.size() != gt.size()) throw InvalidArgument("pooled_average_precision: length mismatch");
  std::vector<RankedPixel> ranked;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) append_ranking(scores[i], gt[i], ranked, positives);
  if (positives == 0) throw InvalidArgument("pooled_average_precision: empty ground truth");
  sort_ranking(ranked);
  return ap_of_ranking(ranked, positives);
}

double jaccard(const BinaryMask& pred, const BinaryMask& gt) {
  check_masks(pred, gt);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool a = pred.bits[i] != 0, b = gt.bits[i] != 0;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask mask_boundary(const BinaryMask& mask) {
  BinaryMask out(mask.width, mask.height, mask.object_id);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      const bool edge = (x > 0 && !mask.at(x - 1, y)) || (x + 1 < mask.width && !mask.at(x + 1, y)) ||
                        (y > 0 && !mask.at(x, y - 1)) || (y + 1 < mask.height && !mask.at(x, y + 1));
      if (edge) out.set(x, y);
    }
  }
  return out;
}

int default_boundary_tolerance(int width, int height) {
  const double diag = std::hypot(static_cast<double>(width), static_cast<double>(height));
  return static_cast<int>(std::ceil(0.008 * diag));
}

double BoundaryMatch::precision() const {
  return pred_boundary == 0 ? 1.0 : static_cast<double>(pred_matched) / pred_boundary;
}

double BoundaryMatch::recall() const {
  return gt_boundary == 0 ? 1.0 : static_cast<double>(gt_matched) / gt_boundary;
}

double BoundaryMatch::f_measure() const {
  if (pred_boundary == 0 && gt_boundary == 0) return 1.0;
  if (pred_boundary == 0 || gt_boundary == 0) return 0.0;
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

BoundaryMatch boundary_match(const BinaryMask& pred, const BinaryMask& gt, int tolerance) {
  check_masks(pred, gt);
  if (tolerance < 0) throw InvalidArgument("boundary_match: negative tolerance");
  const BinaryMask bp = mask_boundary(pred);
  const BinaryMask bg = mask_boundary(gt);

  std::vector<std::pair<int, int>> disk;
  for (int dy = -tolerance; dy <= tolerance; ++dy) {
    for (int dx = -tolerance; dx <= tolerance; ++dx) {
      if (dx * dx + dy * dy <= tolerance * tolerance) disk.emplace_back(dx, dy);
    }
  }
  const auto near = [&](const BinaryMask& other, int x, int y) {
    for (const auto& [dx, dy] : disk) {
      const int u = x + dx, v = y + dy;
      if (u >= 0 && v >= 0 && u < other.width && v < other.height && other.at(u, v)) return true;
    }
    return false;
  };

  BoundaryMatch m;
  for (int y = 0; y < bp.height; ++y) {
    for (int x = 0; x < bp.width; ++x) {
      if (bp.at(x, y)) {
        ++m.pred_boundary;
        if (near(bg, x, y)) ++m.pred_matched;
      }
      if (bg.at(x, y)) {
        ++m.gt_boundary;
        if (near(bp, x, y)) ++m.gt_matched;
      }
    }
  }
  return m;
}

double boundary_f(const BinaryMask& pred, const BinaryMask& gt, std::optional<int> tolerance) {
  const int tol = tolerance.value_or(default_boundary_tolerance(pred.width, pred.height));
  return boundary_match(pred, gt, tol).f_measure();
}

void MetricReport::add(const std::string& frame, const std::string& metric,
                       std::optional<double> value) {
  records_.push_back({frame, metric, value});
}

void MetricReport::merge(const MetricReport& other) {
  records_.insert(records_.end(), other.records_.begin(), other.records_.end());
}

std::vector<std::string> MetricReport::metrics() const {
  std::vector<std::string> out;
  for (const auto& r : records_) {
    if (std::find(out.begin(), out.end(), r.metric) == out.end()) out.push_back(r.metric);
  }
  return out;
}

double MetricReport::mean(const std::string& metric) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records_) {
    if (r.metric == metric && r.value) {
      sum += *r.value;
      ++n;
    }
  }
  if (n == 0) throw InvalidArgument("MetricReport: no defined values for '" + metric + "'");
  return sum / static_cast<double>(n);
}

std::size_t MetricReport::defined_count(const std::string& metric) const {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [&](const Record& r) {
    return r.metric == metric && r.value.has_value();
  }));
}

std::size_t MetricReport::undefined_count(const std::string& metric) const {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [&](const Record& r) {
    return r.metric == metric && !r.value.has_value();
  }));
}

std::string format_metric_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string MetricReport::to_csv() const {
  std::string out = "frame,metric,value\n";
  for (const auto& r : records_) {
    out += fmt::format("{},{},{}\n", r.frame, r.metric, r.value ? format_metric_value(*r.value) : "");
  }
  return out;
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json means = nlohmann::ordered_json::object();
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  nlohmann::ordered_json undefined = nlohmann::ordered_json::object();
  for (const auto& m : metrics()) {
    const std::size_t n = defined_count(m);
    if (n == 0) {
      means[m] = nullptr;
    } else {
      const double v = mean(m);
      if (std::isfinite(v)) {
        means[m] = v;
      } else {
        means[m] = format_metric_value(v);
      }
    }
    counts[m] = n;
    undefined[m] = undefined_count(m);
  }
  nlohmann::ordered_json doc;
  doc["means"] = means;
  doc["counts"] = counts;
  doc["undefined"] = undefined;
  return doc.dump(2) + "\n";
}

}  // namespace egofields
