#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "egofields/error.h"
#include "egofields/metrics.h"
#include "support/metric_oracles.h"

namespace egofields {
namespace {

BinaryMask to_mask(const oracle::Grid& g) {
  BinaryMask m(g.w, g.h);
  for (std::size_t i = 0; i < g.v.size(); ++i) m.bits[i] = static_cast<std::uint8_t>(g.v[i]);
  return m;
}

BinaryMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  BinaryMask m(w, h);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.set(x, y);
  return m;
}

TEST(Psnr, IdenticalImagesGiveSentinel) {
  cv::Mat a(8, 8, CV_64FC3, cv::Scalar(0.2, 0.4, 0.6));
  EXPECT_EQ(psnr(a, a), kPsnrIdentical);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
}

TEST(Psnr, UniformErrorClosedForm) {
  cv::Mat a(16, 16, CV_64F, cv::Scalar(0.5));
  cv::Mat b(16, 16, CV_64F, cv::Scalar(0.5 + 1.0 / 16.0));
  EXPECT_NEAR(psnr(a, b), 20.0 * std::log10(16.0), 1e-12);
  EXPECT_NEAR(20.0 * std::log10(16.0), 24.082, 5e-4);
}

TEST(Psnr, EightBitInputsAreScaled) {
  cv::Mat a(4, 4, CV_8U, cv::Scalar(100));
  cv::Mat b(4, 4, CV_8U, cv::Scalar(117));
  EXPECT_NEAR(psnr(a, b), -20.0 * std::log10(17.0 / 255.0), 1e-12);
}

TEST(Psnr, RejectsMismatchAndEmptyRegion) {
  cv::Mat a(4, 4, CV_64F, cv::Scalar(0)), b(4, 5, CV_64F, cv::Scalar(0));
  EXPECT_THROW(psnr(a, b), InvalidArgument);
  EXPECT_THROW(psnr(a, a, BinaryMask(4, 4)), InvalidArgument);
  EXPECT_THROW(psnr(a, a, BinaryMask(5, 4)), InvalidArgument);
}

TEST(Psnr, MatchesBruteForceOnRandomPairs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const int ch = 1 + t % 3;
    cv::Mat a(16, 16, CV_64FC(ch)), b(16, 16, CV_64FC(ch));
    std::vector<double> va, vb;
    std::vector<int> all, region_include;
    BinaryMask region(16, 16);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        const bool in = u(rng) < 0.5 || (x == 0 && y == 0);
        region.set(x, y, in);
        for (int c = 0; c < ch; ++c) {
          const double p = u(rng), q = u(rng);
          a.ptr<double>(y)[x * ch + c] = p;
          b.ptr<double>(y)[x * ch + c] = q;
          va.push_back(p);
          vb.push_back(q);
          all.push_back(1);
          region_include.push_back(in ? 1 : 0);
        }
      }
    }
    EXPECT_NEAR(psnr(a, b), oracle::mse_psnr(va, vb, all), 1e-9);
    EXPECT_NEAR(psnr(a, b, region), oracle::mse_psnr(va, vb, region_include), 1e-9);
    EXPECT_DOUBLE_EQ(psnr(a, b), psnr(b, a));
  }
}

TEST(PsnrSplit, RegionDecomposition) {
  cv::Mat gt(10, 10, CV_64F, cv::Scalar(0.5));
  cv::Mat pred = gt.clone();
  const BinaryMask fg = rect_mask(10, 10, 2, 2, 5, 5);
  for (int y = 2; y < 5; ++y)
    for (int x = 2; x < 5; ++x) pred.at<double>(y, x) = 0.6;
  const PsnrSplit s = psnr_split(pred, gt, fg);
  ASSERT_TRUE(s.bg && s.fg);
  EXPECT_TRUE(std::isinf(*s.bg));
  EXPECT_GT(s.all, *s.fg);
  EXPECT_FALSE(std::isinf(s.all));

  const PsnrSplit empty = psnr_split(pred, gt, BinaryMask(10, 10));
  EXPECT_FALSE(empty.fg.has_value());
  EXPECT_EQ(empty.all, *empty.bg);

  BinaryMask full(10, 10);
  std::fill(full.bits.begin(), full.bits.end(), 1);
  const PsnrSplit all_fg = psnr_split(pred, gt, full);
  EXPECT_FALSE(all_fg.bg.has_value());
  EXPECT_EQ(all_fg.all, *all_fg.fg);
}

TEST(AveragePrecision, HandEnumeratedFixture) {
  // Pixels a, b, c, d in row-major order; gt = {a, b}.
  ScoreMap s(4, 1);
  s.values = {0.9, 0.7, 0.8, 0.1};
  BinaryMask gt(4, 1);
  gt.set(0, 0);
  gt.set(1, 0);
  EXPECT_EQ(average_precision(s, gt), (1.0 + 2.0 / 3.0) / 2.0);
  EXPECT_NEAR(average_precision(s, gt), 5.0 / 6.0, 1e-15);
}

TEST(AveragePrecision, PerfectScoresGiveOne) {
  const BinaryMask gt = rect_mask(16, 16, 3, 4, 9, 12);
  ScoreMap s(16, 16);
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = gt.bits[i];
  EXPECT_DOUBLE_EQ(average_precision(s, gt), 1.0);
}

TEST(AveragePrecision, TiesKeepRowMajorOrder) {
  ScoreMap s(4, 1, 0.5);
  BinaryMask gt(4, 1);
  gt.set(3, 0);
  EXPECT_DOUBLE_EQ(average_precision(s, gt), 0.25);
  gt = BinaryMask(4, 1);
  gt.set(0, 0);
  EXPECT_DOUBLE_EQ(average_precision(s, gt), 1.0);
}

TEST(AveragePrecision, AntiCorrelatedMatchesRankSum) {
  const BinaryMask gt = rect_mask(16, 16, 0, 0, 16, 4);  // p = 0.25
  ScoreMap s(16, 16);
  std::vector<double> flat(256);
  std::vector<int> g(256);
  for (std::size_t i = 0; i < 256; ++i) {
    s.values[i] = 1.0 - gt.bits[i];
    flat[i] = s.values[i];
    g[i] = gt.bits[i];
  }
  const double ap = average_precision(s, gt);
  EXPECT_NEAR(ap, oracle::rank_sum_ap(flat, g), 1e-12);
  // Positives occupy the last 64 ranks: mean of k / (192 + k).
  double expect = 0.0;
  for (int k = 1; k <= 64; ++k) expect += k / (192.0 + k);
  EXPECT_NEAR(ap, expect / 64.0, 1e-12);
  EXPECT_LT(ap, 0.25);
}

TEST(AveragePrecision, MatchesRankSumOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> levels(0, 7);
  for (int t = 0; t < 300; ++t) {
    oracle::Grid g = oracle::random_grid(rng, 16, 16);
    g.v[static_cast<std::size_t>(t) % g.v.size()] = 1;
    ScoreMap s(16, 16);
    std::vector<double> flat(256);
    for (std::size_t i = 0; i < 256; ++i) {
      // Quantized scores so ties are common.
      flat[i] = (t % 2 == 0) ? u(rng) : levels(rng) / 7.0;
      s.values[i] = flat[i];
    }
    EXPECT_NEAR(average_precision(s, to_mask(g)), oracle::rank_sum_ap(flat, g.v), 1e-9);
  }
}

TEST(AveragePrecision, EmptyGroundTruth) {
  EXPECT_THROW(average_precision(ScoreMap(4, 4), BinaryMask(4, 4)), InvalidArgument);
  ScoreMap bad(2, 2);
  bad.values[0] = 1.5;
  BinaryMask gt(2, 2);
  gt.set(0, 0);
  EXPECT_THROW(average_precision(bad, gt), InvalidArgument);

  std::vector<ScoreMap> scores(3, ScoreMap(4, 1, 0.5));
  std::vector<BinaryMask> masks(3, BinaryMask(4, 1));
  EXPECT_THROW(mean_average_precision(scores, masks), InvalidArgument);
  masks[1].set(0, 0);
  const MeanApResult r = mean_average_precision(scores, masks);
  EXPECT_EQ(r.evaluated, 1u);
  EXPECT_EQ(r.skipped, (std::vector<std::size_t>{0, 2}));
  EXPECT_DOUBLE_EQ(r.map, 1.0);
}

TEST(AveragePrecision, PooledDiffersFromPerFrameMean) {
  ScoreMap a(2, 1), b(2, 1);
  a.values = {0.9, 0.1};
  b.values = {0.2, 0.8};
  BinaryMask ga(2, 1), gb(2, 1);
  ga.set(0, 0);
  gb.set(0, 0);
  EXPECT_DOUBLE_EQ(mean_average_precision({a, b}, {ga, gb}).map, 0.75);
  // Pooled ranking: 0.9(+) 0.8(-) 0.2(+) 0.1(-) -> (1 + 2/3) / 2.
  EXPECT_NEAR(pooled_average_precision({a, b}, {ga, gb}), 5.0 / 6.0, 1e-15);
}

TEST(Jaccard, Fixtures) {
  const BinaryMask a = rect_mask(5, 15, 0, 0, 5, 10);
  const BinaryMask b = rect_mask(5, 15, 0, 5, 5, 15);
  // 50 + 50 cells sharing rows 5..9: 25 / 75.
  EXPECT_DOUBLE_EQ(jaccard(a, b), 1.0 / 3.0);
  // |∩| = 25, |∪| = 125.
  const BinaryMask column = rect_mask(10, 15, 0, 0, 5, 15);
  BinaryMask ell = rect_mask(10, 15, 0, 10, 5, 15);
  for (int y = 0; y < 10; ++y)
    for (int x = 5; x < 10; ++x) ell.set(x, y);
  EXPECT_DOUBLE_EQ(jaccard(column, ell), 0.2);
  EXPECT_DOUBLE_EQ(jaccard(a, a), 1.0);
  EXPECT_DOUBLE_EQ(jaccard(rect_mask(5, 15, 0, 0, 2, 2), rect_mask(5, 15, 3, 3, 5, 5)), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(BinaryMask(3, 3), BinaryMask(3, 3)), 1.0);
  EXPECT_THROW(jaccard(BinaryMask(3, 3), BinaryMask(3, 4)), InvalidArgument);
}

TEST(Jaccard, MatchesOracleAndIsSymmetric) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 500; ++t) {
    const auto ga = oracle::random_grid(rng, 16, 16), gb = oracle::random_grid(rng, 16, 16);
    const BinaryMask a = to_mask(ga), b = to_mask(gb);
    EXPECT_NEAR(jaccard(a, b), oracle::jaccard(ga, gb), 1e-12);
    EXPECT_EQ(jaccard(a, b), jaccard(b, a));
  }
}

TEST(Boundary, DefaultTolerance) {
  EXPECT_EQ(default_boundary_tolerance(456, 256), 5);  // ceil(0.008 * 522.9)
  EXPECT_EQ(default_boundary_tolerance(854, 480), 8);
}

TEST(Boundary, ExtractionIgnoresImageBorder) {
  BinaryMask full(6, 6);
  std::fill(full.bits.begin(), full.bits.end(), 1);
  EXPECT_TRUE(mask_boundary(full).empty());
  const BinaryMask sq = rect_mask(10, 10, 2, 2, 7, 7);
  EXPECT_EQ(mask_boundary(sq).count(), 16u);  // 5x5 ring
}

TEST(Boundary, SquaresAtAndBeyondTolerance) {
  const int tol = 5;
  const BinaryMask outer = rect_mask(120, 120, 20, 20, 100, 100);
  // Horizontal shift: every boundary pixel has a partner exactly tol away.
  EXPECT_DOUBLE_EQ(boundary_f(outer, rect_mask(120, 120, 20 + tol, 20, 100 + tol, 100), tol), 1.0);
  EXPECT_LT(boundary_f(outer, rect_mask(120, 120, 20 + tol + 1, 20, 100 + tol + 1, 100), tol),
            1.0);
  // An inset square keeps its whole boundary at least tol + 2 away.
  const BinaryMask beyond =
      rect_mask(120, 120, 20 + tol + 2, 20 + tol + 2, 100 - tol - 2, 100 - tol - 2);
  EXPECT_DOUBLE_EQ(boundary_f(outer, beyond, tol), 0.0);
  EXPECT_DOUBLE_EQ(boundary_f(outer, outer, tol), 1.0);
  EXPECT_DOUBLE_EQ(boundary_f(outer, outer), 1.0);
}

TEST(Boundary, EmptyCases) {
  const BinaryMask e(20, 20);
  EXPECT_DOUBLE_EQ(boundary_f(e, e, 2), 1.0);
  EXPECT_DOUBLE_EQ(boundary_f(rect_mask(20, 20, 2, 2, 8, 8), e, 2), 0.0);
  EXPECT_DOUBLE_EQ(boundary_f(e, rect_mask(20, 20, 2, 2, 8, 8), 2), 0.0);
}

TEST(Boundary, MatchCountsEqualPairwiseOracle) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 400; ++t) {
    const auto ga = oracle::random_grid(rng, 16, 16), gb = oracle::random_grid(rng, 16, 16);
    const int tol = t % 4;
    const BoundaryMatch m = boundary_match(to_mask(ga), to_mask(gb), tol);
    const oracle::BoundaryCounts c = oracle::boundary_counts(ga, gb, tol);
    ASSERT_EQ(static_cast<long>(m.pred_boundary), c.pred_boundary);
    ASSERT_EQ(static_cast<long>(m.gt_boundary), c.gt_boundary);
    ASSERT_EQ(static_cast<long>(m.pred_matched), c.pred_matched);
    ASSERT_EQ(static_cast<long>(m.gt_matched), c.gt_matched);
  }
}

TEST(JfMean, Values) {
  EXPECT_DOUBLE_EQ(jf_mean(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(jf_mean(0, 0), 0.0);
  EXPECT_NEAR(jf_mean(0.305, 0.322), 0.3135, 1e-12);
}

TEST(Metrics, DegradingPerfectPredictionNeverHelps) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    auto g = oracle::random_grid(rng, 16, 16);
    g.v[0] = 1;
    const BinaryMask gt = to_mask(g);
    BinaryMask pred = gt;
    ScoreMap s(16, 16);
    for (std::size_t i = 0; i < 256; ++i) s.values[i] = gt.bits[i];
    std::uniform_int_distribution<std::size_t> pix(0, 255);
    for (int k = 0; k < 3; ++k) {
      const std::size_t i = pix(rng);
      pred.bits[i] ^= 1;
      s.values[i] = 1.0 - s.values[i];
    }
    EXPECT_LE(jaccard(pred, gt), 1.0);
    EXPECT_LE(boundary_f(pred, gt, 1), 1.0);
    EXPECT_LE(average_precision(s, gt), 1.0);
  }
}

TEST(MetricReport, MeansSkipUndefined) {
  MetricReport r;
  r.add("f1", "psnr_fg", 20.0);
  r.add("f2", "psnr_fg", std::nullopt);
  r.add("f2", "psnr_fg", 30.0);
  r.add("f1", "J", 0.5);
  EXPECT_DOUBLE_EQ(r.mean("psnr_fg"), 25.0);
  EXPECT_EQ(r.defined_count("psnr_fg"), 2u);
  EXPECT_EQ(r.undefined_count("psnr_fg"), 1u);
  EXPECT_EQ(r.metrics(), (std::vector<std::string>{"psnr_fg", "J"}));
  EXPECT_THROW(r.mean("nope"), InvalidArgument);
  EXPECT_EQ(r.to_csv(), "frame,metric,value\nf1,psnr_fg,20\nf2,psnr_fg,\nf2,psnr_fg,30\nf1,J,0.5\n");
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_DOUBLE_EQ(j["means"]["psnr_fg"].get<double>(), 25.0);
  EXPECT_EQ(j["undefined"]["psnr_fg"].get<int>(), 1);

  MetricReport inf;
  inf.add("a", "psnr", kPsnrIdentical);
  EXPECT_EQ(nlohmann::json::parse(inf.to_json())["means"]["psnr"], "inf");
  EXPECT_EQ(inf.to_csv(), "frame,metric,value\na,psnr,inf\n");
}

}  // namespace
}  // namespace egofields
