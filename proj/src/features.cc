#include "egofields/features.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <tuple>

#include <opencv2/features2d.hpp>
#include <opencv2/imgproc.hpp>

#include "egofields/error.h"

namespace egofields {
namespace {

cv::Mat to_gray8(const cv::Mat& image) {
  cv::Mat gray;
  if (image.channels() == 3) {
    cv::cvtColor(image, gray, cv::COLOR_BGR2GRAY);
  } else if (image.channels() == 4) {
    cv::cvtColor(image, gray, cv::COLOR_BGRA2GRAY);
  } else {
    gray = image;
  }
  if (gray.depth() == CV_8U) return gray;
  cv::Mat out;
  const double scale = (gray.depth() == CV_32F || gray.depth() == CV_64F) ? 255.0 : 1.0;
  gray.convertTo(out, CV_8U, scale);
  return out;
}

bool stronger(const cv::KeyPoint& l, const cv::KeyPoint& r) {
  return std::make_tuple(-l.response, l.pt.y, l.pt.x, l.size, l.angle, l.octave) <
         std::make_tuple(-r.response, r.pt.y, r.pt.x, r.size, r.angle, r.octave);
}

struct Nearest {
  std::int64_t index = -1;
  double d1 = std::numeric_limits<double>::infinity();
  double d2 = std::numeric_limits<double>::infinity();
};

double exact_distance(const DescriptorMatrix& a, std::size_t i, const DescriptorMatrix& b,
                      std::size_t j) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const double d = static_cast<double>(a(i, k)) - static_cast<double>(b(j, k));
    sum += d * d;
  }
  return std::sqrt(sum);
}

// Two nearest neighbours of every row of a among rows of b. Candidates come
// from a float similarity product; the best few are re-ranked with exact
// double-precision distances.
std::vector<Nearest> nearest_two(const DescriptorMatrix& a, const DescriptorMatrix& b) {
  constexpr int kCandidates = 4;
  const DescriptorMatrix sim = a * b.transpose();
  std::vector<Nearest> out(static_cast<std::size_t>(a.rows()));
  std::array<std::pair<float, Eigen::Index>, kCandidates> top{};
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    int filled = 0;
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      const float s = sim(i, j);
      if (filled < kCandidates) {
        top[filled++] = {s, j};
        std::sort(top.begin(), top.begin() + filled,
                  [](const auto& l, const auto& r) { return l.first > r.first; });
      } else if (s > top[kCandidates - 1].first) {
        top[kCandidates - 1] = {s, j};
        std::sort(top.begin(), top.end(),
                  [](const auto& l, const auto& r) { return l.first > r.first; });
      }
    }
    Nearest& n = out[static_cast<std::size_t>(i)];
    for (int c = 0; c < filled; ++c) {
      const auto j = static_cast<std::size_t>(top[c].second);
      const double d = exact_distance(a, static_cast<std::size_t>(i), b, j);
      if (d < n.d1 || (d == n.d1 && static_cast<std::int64_t>(j) < n.index)) {
        n.d2 = n.d1;
        n.d1 = d;
        n.index = static_cast<std::int64_t>(j);
      } else if (d < n.d2) {
        n.d2 = d;
      }
    }
  }
  return out;
}

bool passes_ratio(const Nearest& n, double ratio) {
  return n.index >= 0 && n.d1 < ratio * n.d2;
}

template <typename T>
void put_le(std::ostream& os, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  }
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& is, const std::filesystem::path& path) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  std::array<unsigned char, sizeof(U)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw ParseError(path.string(), 0, "truncated feature file");
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

FeatureSet detect_and_describe(const cv::Mat& image, const FeatureConfig& config) {
  if (image.empty() || image.cols < 32 || image.rows < 32) {
    throw InvalidArgument("feature extraction needs an image of at least 32x32 pixels");
  }
  const cv::Mat gray = to_gray8(image);
  auto sift = cv::SIFT::create(0, config.octave_layers, config.contrast_threshold,
                               config.edge_threshold, config.sigma);
  std::vector<cv::KeyPoint> kps;
  sift->detect(gray, kps);
  std::sort(kps.begin(), kps.end(), stronger);
  if (config.max_features > 0 && kps.size() > static_cast<std::size_t>(config.max_features)) {
    kps.resize(static_cast<std::size_t>(config.max_features));
  }
  FeatureSet out;
  if (kps.empty()) return out;

  cv::Mat desc;
  sift->compute(gray, kps, desc);

  out.keypoints.reserve(kps.size());
  std::vector<int> rows;
  rows.reserve(kps.size());
  for (int i = 0; i < desc.rows; ++i) {
    const double norm = cv::norm(desc.row(i), cv::NORM_L2);
    if (!(norm > 0.0)) continue;
    const cv::KeyPoint& kp = kps[static_cast<std::size_t>(i)];
    // OpenCV puts pixel centers at integer coordinates; ours sit at +0.5.
    const float x = std::clamp(kp.pt.x + 0.5f, 0.0f, std::nextafter(static_cast<float>(gray.cols), 0.0f));
    const float y = std::clamp(kp.pt.y + 0.5f, 0.0f, std::nextafter(static_cast<float>(gray.rows), 0.0f));
    out.keypoints.push_back({x, y, std::max(kp.size, 1e-3f),
                             static_cast<float>(kp.angle * CV_PI / 180.0)});
    rows.push_back(i);
  }
  out.descriptors.resize(static_cast<Eigen::Index>(rows.size()), kDescriptorSize);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const float* src = desc.ptr<float>(rows[r]);
    double norm = 0.0;
    for (int k = 0; k < kDescriptorSize; ++k) norm += static_cast<double>(src[k]) * src[k];
    norm = std::sqrt(norm);
    for (int k = 0; k < kDescriptorSize; ++k) {
      out.descriptors(static_cast<Eigen::Index>(r), k) = static_cast<float>(src[k] / norm);
    }
  }
  return out;
}

MatchSet match(const FeatureSet& a, const FeatureSet& b, const MatchConfig& config) {
  if (!(config.ratio > 0.0) || config.ratio > 1.0) {
    throw InvalidArgument("ratio threshold must be in (0, 1]");
  }
  MatchSet out;
  out.ratio_threshold = config.ratio;
  if (a.size() < 2 || b.size() < 2) return out;

  const auto ab = nearest_two(a.descriptors, b.descriptors);
  std::vector<Nearest> ba;
  if (config.mutual) ba = nearest_two(b.descriptors, a.descriptors);

  for (std::size_t i = 0; i < ab.size(); ++i) {
    const Nearest& n = ab[i];
    if (!passes_ratio(n, config.ratio)) continue;
    const auto j = static_cast<std::size_t>(n.index);
    if (config.mutual) {
      const Nearest& back = ba[j];
      if (!passes_ratio(back, config.ratio) || static_cast<std::size_t>(back.index) != i) {
        continue;
      }
    }
    out.pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                         static_cast<float>(n.d1)});
  }
  return out;
}

void write_feature_file(const FeatureSet& features, const std::filesystem::path& path) {
  if (features.descriptors.rows() != static_cast<Eigen::Index>(features.keypoints.size()) ||
      (features.descriptors.rows() > 0 && features.descriptors.cols() != kDescriptorSize)) {
    throw InvalidArgument("feature set has inconsistent descriptor matrix");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  put_le(os, static_cast<std::uint32_t>(features.keypoints.size()));
  for (const auto& kp : features.keypoints) {
    put_le(os, kp.x);
    put_le(os, kp.y);
    put_le(os, kp.scale);
    put_le(os, kp.orientation);
  }
  for (Eigen::Index r = 0; r < features.descriptors.rows(); ++r) {
    for (Eigen::Index c = 0; c < kDescriptorSize; ++c) put_le(os, features.descriptors(r, c));
  }
  if (!os) throw Error("failed writing " + path.string());
}

FeatureSet read_feature_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  const auto count = get_le<std::uint32_t>(is, path);
  FeatureSet out;
  out.keypoints.resize(count);
  for (auto& kp : out.keypoints) {
    kp.x = get_le<float>(is, path);
    kp.y = get_le<float>(is, path);
    kp.scale = get_le<float>(is, path);
    kp.orientation = get_le<float>(is, path);
  }
  out.descriptors.resize(count, kDescriptorSize);
  for (std::uint32_t r = 0; r < count; ++r) {
    double norm = 0.0;
    for (int c = 0; c < kDescriptorSize; ++c) {
      const float v = get_le<float>(is, path);
      out.descriptors(r, c) = v;
      norm += static_cast<double>(v) * v;
    }
    if (std::abs(std::sqrt(norm) - 1.0) > 1e-4) {
      throw ParseError(path.string(), 0,
                       "descriptor " + std::to_string(r) + " is not unit-normalized");
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw ParseError(path.string(), 0, "trailing bytes after feature record");
  }
  return out;
}

}  // namespace egofields
