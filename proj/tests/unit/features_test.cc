#include <cmath>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <opencv2/imgproc.hpp>

#include "egofields/error.h"
#include "egofields/features.h"
#include "egofields/synthetic.h"
#include "support/oracles.h"

namespace egofields {
namespace {

cv::Mat textured(std::uint64_t seed = 3) {
  return render(presets::static_camera(1, seed), 0);
}

DescriptorMatrix random_descriptors(std::mt19937_64& rng, int n) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  DescriptorMatrix d(n, kDescriptorSize);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < kDescriptorSize; ++k) d(i, k) = g(rng);
    d.row(i).normalize();
  }
  return d;
}

FeatureSet with_descriptors(DescriptorMatrix d) {
  FeatureSet f;
  f.keypoints.resize(static_cast<std::size_t>(d.rows()));
  f.descriptors = std::move(d);
  return f;
}

TEST(Detect, ConstantImageHasNoKeypoints) {
  const cv::Mat gray(256, 456, CV_8U, cv::Scalar(97));
  EXPECT_TRUE(detect_and_describe(gray).empty());
}

TEST(Detect, RejectsTinyImages) {
  const cv::Mat tiny(31, 64, CV_8U, cv::Scalar(0));
  EXPECT_THROW(detect_and_describe(tiny), InvalidArgument);
}

TEST(Detect, DeterministicAndCapped) {
  const cv::Mat img = textured();
  FeatureConfig cfg;
  cfg.max_features = 300;
  const FeatureSet a = detect_and_describe(img, cfg);
  const FeatureSet b = detect_and_describe(img, cfg);
  ASSERT_EQ(a.size(), 300u);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.keypoints[i].x, b.keypoints[i].x);
    EXPECT_EQ(a.keypoints[i].y, b.keypoints[i].y);
  }
  EXPECT_TRUE(a.descriptors == b.descriptors);
  for (Eigen::Index i = 0; i < a.descriptors.rows(); ++i) {
    EXPECT_NEAR(a.descriptors.row(i).norm(), 1.0f, 1e-5f);
  }
}

TEST(Detect, KeypointsInsideImage) {
  const FeatureSet f = detect_and_describe(textured());
  ASSERT_FALSE(f.empty());
  for (const auto& k : f.keypoints) {
    EXPECT_GE(k.x, 0.0f);
    EXPECT_LT(k.x, 456.0f);
    EXPECT_GE(k.y, 0.0f);
    EXPECT_LT(k.y, 256.0f);
  }
}

TEST(Match, SelfMatchIsIdentityWithZeroDistance) {
  const FeatureSet f = detect_and_describe(textured());
  const MatchSet m = match(f, f);
  EXPECT_EQ(m.size(), f.size());
  for (const auto& p : m.pairs) {
    EXPECT_EQ(p.a, p.b);
    EXPECT_EQ(p.distance, 0.0f);
  }
}

TEST(Match, SelfMatchOnDistinctDescriptorsKeepsAll) {
  std::mt19937_64 rng(1);
  const FeatureSet f = with_descriptors(random_descriptors(rng, 50));
  const MatchSet m = match(f, f);
  ASSERT_EQ(m.size(), 50u);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(m.pairs[i].a, i);
    EXPECT_EQ(m.pairs[i].b, i);
    EXPECT_EQ(m.pairs[i].distance, 0.0f);
  }
}

TEST(Match, EqualFirstAndSecondNeighbourFailsRatio) {
  std::mt19937_64 rng(2);
  DescriptorMatrix a = random_descriptors(rng, 3);
  DescriptorMatrix b(2, kDescriptorSize);
  b.row(0) = a.row(0);
  b.row(1) = a.row(0);
  // Both rows of b are equidistant from every row of a.
  EXPECT_TRUE(match(with_descriptors(a), with_descriptors(b), {0.99, false}).pairs.empty());
  EXPECT_TRUE(match(with_descriptors(a), with_descriptors(b), {1.0, false}).pairs.empty());
}

TEST(Match, TooFewDescriptorsGivesEmpty) {
  std::mt19937_64 rng(3);
  const FeatureSet one = with_descriptors(random_descriptors(rng, 1));
  const FeatureSet many = with_descriptors(random_descriptors(rng, 10));
  EXPECT_TRUE(match(one, many).pairs.empty());
  EXPECT_TRUE(match(many, one).pairs.empty());
}

TEST(Match, RejectsBadRatio) {
  std::mt19937_64 rng(4);
  const FeatureSet f = with_descriptors(random_descriptors(rng, 5));
  EXPECT_THROW(match(f, f, {0.0, false}), InvalidArgument);
  EXPECT_THROW(match(f, f, {1.5, false}), InvalidArgument);
}

TEST(Match, AgreesWithBruteForceReference) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const DescriptorMatrix da = random_descriptors(rng, 100);
    // Half of b are noisy copies of a so that the ratio test passes sometimes.
    DescriptorMatrix db = random_descriptors(rng, 100);
    std::normal_distribution<float> g(0.0f, 0.15f);
    for (int i = 0; i < 50; ++i) {
      for (int k = 0; k < kDescriptorSize; ++k) db(i, k) = da(2 * i, k) + g(rng);
      db.row(i).normalize();
    }
    const MatchSet got = match(with_descriptors(da), with_descriptors(db));
    const auto want = oracle::brute_force_match(da, db, 0.8);
    ASSERT_EQ(got.size(), want.size()) << "seed " << seed;
    ASSERT_GT(want.size(), 10u);
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(got.pairs[i].a, want[i].a);
      EXPECT_EQ(got.pairs[i].b, want[i].b);
      EXPECT_NEAR(got.pairs[i].distance, want[i].distance, 1e-5);
    }
  }
}

TEST(Match, MutualModeIsSymmetric) {
  const cv::Mat img = textured(5);
  const FeatureSet a = detect_and_describe(img);
  cv::Mat shifted;
  const cv::Mat t = (cv::Mat_<double>(2, 3) << 1, 0, 9, 0, 1, -4);
  cv::warpAffine(img, shifted, t, img.size());
  const FeatureSet b = detect_and_describe(shifted);
  const MatchSet ab = match(a, b, {0.8, true});
  const MatchSet ba = match(b, a, {0.8, true});
  ASSERT_EQ(ab.size(), ba.size());
  std::set<std::pair<std::uint32_t, std::uint32_t>> fwd, rev;
  for (const auto& p : ab.pairs) fwd.emplace(p.a, p.b);
  for (const auto& p : ba.pairs) rev.emplace(p.b, p.a);
  EXPECT_EQ(fwd, rev);
}

TEST(Match, EachAIndexAtMostOnce) {
  const FeatureSet a = detect_and_describe(textured(6));
  const FeatureSet b = detect_and_describe(textured(7));
  const MatchSet m = match(a, b);
  std::set<std::uint32_t> seen;
  for (const auto& p : m.pairs) {
    EXPECT_TRUE(seen.insert(p.a).second);
    EXPECT_LT(p.b, b.size());
  }
}

TEST(Repeatability, Rotation90KeepsHalfTheKeypoints) {
  const cv::Mat img = textured(8);
  cv::Mat rotated;
  cv::rotate(img, rotated, cv::ROTATE_90_CLOCKWISE);
  const FeatureSet a = detect_and_describe(img);
  const FeatureSet b = detect_and_describe(rotated);
  const MatchSet m = match(a, b, {0.8, true});
  // Clockwise rotation maps (x, y) to (H - y, x) in continuous coordinates.
  std::size_t consistent = 0;
  for (const auto& p : m.pairs) {
    const auto& ka = a.keypoints[p.a];
    const auto& kb = b.keypoints[p.b];
    const double ex = img.rows - ka.y;
    const double ey = ka.x;
    if (std::hypot(kb.x - ex, kb.y - ey) <= 2.0) ++consistent;
  }
  EXPECT_GE(consistent, a.size() / 2) << consistent << " of " << a.size();
}

TEST(Repeatability, KnownHomographyInlierShare) {
  // 15 degree rotation with 1.15x zoom about the image centre.
  const cv::Mat img = textured(9);
  const cv::Mat affine = cv::getRotationMatrix2D({228.0f - 0.5f, 128.0f - 0.5f}, 15.0, 1.15);
  cv::Mat warped;
  cv::warpAffine(img, warped, affine, img.size(), cv::INTER_LINEAR, cv::BORDER_CONSTANT,
                 cv::Scalar(128));
  // OpenCV coordinates sit 0.5 px off ours; conjugate the map accordingly.
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = affine.at<double>(r, c);
  }
  Eigen::Matrix3d shift = Eigen::Matrix3d::Identity();
  shift(0, 2) = shift(1, 2) = 0.5;
  const Eigen::Matrix3d truth = shift * m * shift.inverse();

  const FeatureSet a = detect_and_describe(img);
  const FeatureSet b = detect_and_describe(warped);
  const MatchSet matches = match(a, b);
  ASSERT_GT(matches.size(), 50u);
  std::size_t inliers = 0;
  for (const auto& p : matches.pairs) {
    const Eigen::Vector3d q = truth * Eigen::Vector3d(a.keypoints[p.a].x, a.keypoints[p.a].y, 1);
    const Eigen::Vector2d e(b.keypoints[p.b].x - q.x() / q.z(), b.keypoints[p.b].y - q.y() / q.z());
    if (e.norm() <= 3.0) ++inliers;
  }
  EXPECT_GE(static_cast<double>(inliers), 0.4 * static_cast<double>(matches.size()));
}

TEST(FeatureFile, RoundTrip) {
  const FeatureSet f = detect_and_describe(textured(10));
  const auto path = std::filesystem::temp_directory_path() / "egofields_feat_roundtrip.feat";
  write_feature_file(f, path);
  const FeatureSet g = read_feature_file(path);
  ASSERT_EQ(f.size(), g.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_EQ(f.keypoints[i].x, g.keypoints[i].x);
    EXPECT_EQ(f.keypoints[i].orientation, g.keypoints[i].orientation);
  }
  EXPECT_TRUE(f.descriptors == g.descriptors);
  std::filesystem::remove(path);
}

TEST(FeatureFile, LayoutIsLittleEndianCountThenRecords) {
  std::mt19937_64 rng(11);
  FeatureSet f = with_descriptors(random_descriptors(rng, 2));
  f.keypoints[0] = {1.5f, 2.5f, 3.0f, 0.25f};
  const auto path = std::filesystem::temp_directory_path() / "egofields_feat_layout.feat";
  write_feature_file(f, path);
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  ASSERT_EQ(bytes.size(), 4u + 2 * 16 + 2 * 128 * 4);
  EXPECT_EQ(bytes[0], 2);
  EXPECT_EQ(bytes[1] | bytes[2] | bytes[3], 0);
  float x;
  std::memcpy(&x, bytes.data() + 4, 4);
  EXPECT_EQ(x, 1.5f);
  std::filesystem::remove(path);
}

TEST(FeatureFile, TruncatedFileIsRejected) {
  std::mt19937_64 rng(12);
  const FeatureSet f = with_descriptors(random_descriptors(rng, 3));
  const auto path = std::filesystem::temp_directory_path() / "egofields_feat_trunc.feat";
  write_feature_file(f, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 7);
  EXPECT_THROW(read_feature_file(path), Error);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace egofields
