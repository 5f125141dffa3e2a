#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>
#include <opencv2/core.hpp>

namespace egofields {

inline constexpr int kDescriptorSize = 128;

struct Keypoint {
  float x = 0.0f;
  float y = 0.0f;
  float scale = 1.0f;        // detection scale, px
  float orientation = 0.0f;  // radians
};

using DescriptorMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One unit-L2 descriptor row per keypoint.
struct FeatureSet {
  std::vector<Keypoint> keypoints;
  DescriptorMatrix descriptors{0, kDescriptorSize};

  std::size_t size() const { return keypoints.size(); }
  bool empty() const { return keypoints.empty(); }
};

struct FeatureConfig {
  int max_features = 2000;  // strongest responses kept
  int octave_layers = 3;
  double contrast_threshold = 0.04;
  double edge_threshold = 10.0;
  double sigma = 1.6;
};

// Difference-of-Gaussians keypoints with gradient-histogram descriptors.
// Accepts 8-bit or float grayscale (or BGR, converted). Deterministic for
// identical input. Images smaller than 32x32 throw InvalidArgument; a
// constant image yields an empty set.
FeatureSet detect_and_describe(const cv::Mat& image, const FeatureConfig& config = {});

struct Match {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  float distance = 0.0f;
  friend bool operator==(const Match&, const Match&) = default;
};

struct MatchSet {
  std::vector<Match> pairs;
  double ratio_threshold = 0.8;
  std::size_t size() const { return pairs.size(); }
};

struct MatchConfig {
  double ratio = 0.8;
  // Keep (i, j) only if j is i's ratio-tested nearest neighbour in b and i is
  // j's ratio-tested nearest neighbour in a.
  bool mutual = false;
};

// Lowe ratio-test matching: for each descriptor of a, its nearest neighbour
// in b is kept iff d1 < ratio * d2. Fewer than two descriptors on either side
// yields an empty set. Pairs are ordered by index into a.
MatchSet match(const FeatureSet& a, const FeatureSet& b, const MatchConfig& config = {});

// Binary feature record, little-endian:
//   uint32 count
//   count x {float32 x, y, scale, orientation}
//   count x 128 float32 descriptor values, row-major
void write_feature_file(const FeatureSet& features, const std::filesystem::path& path);
FeatureSet read_feature_file(const std::filesystem::path& path);

}  // namespace egofields
