#include "egofields/homography.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "egofields/error.h"

namespace egofields {
namespace {

constexpr double kDegenerateDet = 1e-12;
constexpr double kRankTolerance = 1e-10;

// Similarity transform taking points to zero centroid and mean distance sqrt(2).
Eigen::Matrix3d hartley_transform(std::span<const Eigen::Vector2d> pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) {
    throw DegenerateConfiguration("all points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

std::size_t count_inliers(const Homography& h, std::span<const Eigen::Vector2d> src,
                          std::span<const Eigen::Vector2d> dst, double threshold,
                          std::vector<bool>* mask) {
  const double t2 = threshold * threshold;
  const Eigen::Matrix3d& m = h.matrix();
  std::size_t count = 0;
  if (mask) mask->assign(src.size(), false);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Eigen::Vector3d q = m * src[i].homogeneous();
    if (!(q.z() > 0.0) && !(q.z() < 0.0)) continue;
    const Eigen::Vector2d p = q.head<2>() / q.z();
    if ((p - dst[i]).squaredNorm() <= t2) {
      ++count;
      if (mask) (*mask)[i] = true;
    }
  }
  return count;
}

int required_iterations(double inlier_ratio, double confidence, int cap) {
  if (inlier_ratio >= 1.0) return 1;
  if (inlier_ratio <= 0.0) return cap;
  const double denom = std::log1p(-std::pow(inlier_ratio, 4));
  if (!(denom < 0.0)) return cap;
  const double n = std::ceil(std::log1p(-confidence) / denom);
  return static_cast<int>(std::clamp(n, 1.0, static_cast<double>(cap)));
}

}  // namespace

Homography::Homography(const Eigen::Matrix3d& h) {
  const double norm = h.norm();
  if (!(norm > 0.0) || !h.allFinite()) throw DegenerateConfiguration("invalid homography");
  h_ = h / norm;
  if (h_(2, 2) < 0.0) h_ = -h_;
  if (!(std::abs(h_.determinant()) > kDegenerateDet)) {
    throw DegenerateConfiguration("singular homography");
  }
}

Homography Homography::translation(double tx, double ty) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return Homography(m);
}

Eigen::Vector3d Homography::apply_homogeneous(const Eigen::Vector2d& p) const {
  return h_ * p.homogeneous();
}

Eigen::Vector2d Homography::transfer(const Eigen::Vector2d& p) const {
  const Eigen::Vector3d q = apply_homogeneous(p);
  return q.head<2>() / q.z();
}

Homography Homography::inverse() const { return Homography(h_.inverse()); }

Homography operator*(const Homography& a, const Homography& b) {
  return Homography(a.h_ * b.h_);
}

double corner_transfer_error(const Homography& estimate, const Homography& truth, double width,
                             double height) {
  const Eigen::Vector2d corners[4] = {{0, 0}, {width, 0}, {width, height}, {0, height}};
  double worst = 0.0;
  for (const auto& c : corners) {
    const double e = (estimate.transfer(c) - truth.transfer(c)).norm();
    worst = std::max(worst, std::isfinite(e) ? e : std::numeric_limits<double>::infinity());
  }
  return worst;
}

Homography dlt_solve(std::span<const Eigen::Vector2d> src, std::span<const Eigen::Vector2d> dst) {
  if (src.size() != dst.size()) throw InvalidArgument("correspondence count mismatch");
  if (src.size() < 4) throw InsufficientMatches("DLT needs at least 4 correspondences");
  const Eigen::Matrix3d ts = hartley_transform(src);
  const Eigen::Matrix3d td = hartley_transform(dst);

  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = ts * src[static_cast<std::size_t>(i)].homogeneous();
    const Eigen::Vector3d q = td * dst[static_cast<std::size_t>(i)].homogeneous();
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    a.row(2 * i) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    a.row(2 * i + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // A well-posed problem leaves exactly one null direction.
  if (sv.size() < 8 || !(sv(7) > kRankTolerance * sv(0))) {
    throw DegenerateConfiguration("rank-deficient DLT system (collinear or coincident points)");
  }
  const Eigen::VectorXd hv = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
  return Homography(td.inverse() * hn * ts);
}

HomographyEstimate estimate_homography(std::span<const Eigen::Vector2d> src,
                                       std::span<const Eigen::Vector2d> dst,
                                       const RansacConfig& config) {
  if (src.size() != dst.size()) throw InvalidArgument("correspondence count mismatch");
  if (src.size() < 4) {
    throw InsufficientMatches("insufficient matches: " + std::to_string(src.size()) +
                              " < 4");
  }
  const std::size_t n = src.size();
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::optional<Homography> best;
  std::size_t best_count = 0;
  int needed = config.max_iterations;
  int it = 0;
  std::array<Eigen::Vector2d, 4> s, d;
  for (; it < needed && it < config.max_iterations; ++it) {
    std::array<std::size_t, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      std::size_t c;
      do {
        c = pick(rng);
      } while (std::find(idx.begin(), idx.begin() + k, c) != idx.begin() + k);
      idx[k] = c;
      s[k] = src[c];
      d[k] = dst[c];
    }
    Homography candidate = Homography::identity();
    try {
      candidate = dlt_solve(s, d);
    } catch (const DegenerateConfiguration&) {
      continue;
    }
    const std::size_t count = count_inliers(candidate, src, dst, config.inlier_threshold, nullptr);
    if (count > best_count) {
      best_count = count;
      best = candidate;
      needed = required_iterations(static_cast<double>(count) / static_cast<double>(n),
                                   config.confidence, config.max_iterations);
    }
  }
  if (!best || best_count < 4) {
    throw NoModelFound("no homography supported by at least 4 inliers");
  }

  HomographyEstimate out;
  out.iterations = it;
  out.h = *best;
  out.inlier_count = count_inliers(out.h, src, dst, config.inlier_threshold, &out.inliers);
  // Least-squares re-fit on the inliers, repeated until the inlier set is stable.
  for (int refit = 0; refit < 10; ++refit) {
    std::vector<Eigen::Vector2d> is, id;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.inliers[i]) {
        is.push_back(src[i]);
        id.push_back(dst[i]);
      }
    }
    Homography refined = Homography::identity();
    try {
      refined = dlt_solve(is, id);
    } catch (const DegenerateConfiguration&) {
      break;
    }
    std::vector<bool> mask;
    const std::size_t count = count_inliers(refined, src, dst, config.inlier_threshold, &mask);
    out.h = refined;
    if (count < 4) break;
    const bool stable = mask == out.inliers;
    out.inliers = std::move(mask);
    out.inlier_count = count;
    if (stable) break;
  }
  return out;
}

HomographyEstimate estimate_homography(const MatchSet& matches, std::span<const Keypoint> a,
                                       std::span<const Keypoint> b, const RansacConfig& config) {
  std::vector<Eigen::Vector2d> src, dst;
  src.reserve(matches.size());
  dst.reserve(matches.size());
  for (const auto& m : matches.pairs) {
    if (m.a >= a.size() || m.b >= b.size()) throw InvalidArgument("match index out of range");
    src.emplace_back(a[m.a].x, a[m.a].y);
    dst.emplace_back(b[m.b].x, b[m.b].y);
  }
  return estimate_homography(src, dst, config);
}

}  // namespace egofields
