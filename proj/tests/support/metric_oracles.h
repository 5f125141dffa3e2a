#pragma once

// Deliberately naive references for the evaluation metrics. They work on
// plain vectors and never call into the library.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace egofields::oracle {

struct Grid {
  int w = 0, h = 0;
  std::vector<int> v;  // row-major 0/1
  int at(int x, int y) const { return v[y * w + x]; }
};

inline double mse_psnr(const std::vector<double>& a, const std::vector<double>& b,
                       const std::vector<int>& include) {
  long double sse = 0.0L;
  long n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!include[i]) continue;
    const long double d = static_cast<long double>(a[i]) - b[i];
    sse += d * d;
    ++n;
  }
  const long double mse = sse / n;
  return static_cast<double>(-10.0L * std::log10(mse));
}

inline double jaccard(const Grid& a, const Grid& b) {
  int inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    inter += a.v[i] & b.v[i];
    uni += a.v[i] | b.v[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

// Rank of pixel i = number of pixels placed before it (higher score, or
// equal score with lower index) plus one; computed pairwise.
inline double rank_sum_ap(const std::vector<double>& scores, const std::vector<int>& gt) {
  const std::size_t n = scores.size();
  auto before = [&](std::size_t j, std::size_t i) {
    return scores[j] > scores[i] || (scores[j] == scores[i] && j < i);
  };
  double sum = 0.0;
  int positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!gt[i]) continue;
    ++positives;
    int rank = 1, pos_at_or_above = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !before(j, i)) continue;
      ++rank;
      pos_at_or_above += gt[j];
    }
    sum += static_cast<double>(pos_at_or_above) / rank;
  }
  return sum / positives;
}

struct BoundaryCounts {
  long pred_boundary = 0, gt_boundary = 0, pred_matched = 0, gt_matched = 0;
};

inline std::vector<std::pair<int, int>> edge_pixels(const Grid& g) {
  std::vector<std::pair<int, int>> out;
  const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
  for (int y = 0; y < g.h; ++y) {
    for (int x = 0; x < g.w; ++x) {
      if (!g.at(x, y)) continue;
      int background_neighbours = 0;
      for (int k = 0; k < 4; ++k) {
        const int u = x + dx[k], v = y + dy[k];
        if (u < 0 || v < 0 || u >= g.w || v >= g.h) continue;
        background_neighbours += 1 - g.at(u, v);
      }
      if (background_neighbours > 0) out.emplace_back(x, y);
    }
  }
  return out;
}

// O(n^2) pairwise distance matcher.
inline BoundaryCounts boundary_counts(const Grid& pred, const Grid& gt, int tol) {
  const auto bp = edge_pixels(pred);
  const auto bg = edge_pixels(gt);
  auto matched = [tol](const std::pair<int, int>& p, const std::vector<std::pair<int, int>>& set) {
    for (const auto& q : set) {
      const double d = std::hypot(p.first - q.first, p.second - q.second);
      if (d <= tol + 1e-12) return true;
    }
    return false;
  };
  BoundaryCounts c;
  c.pred_boundary = static_cast<long>(bp.size());
  c.gt_boundary = static_cast<long>(bg.size());
  for (const auto& p : bp) c.pred_matched += matched(p, bg);
  for (const auto& q : bg) c.gt_matched += matched(q, bp);
  return c;
}

// Random blob-ish grid: a few filled rectangles, occasionally empty.
inline Grid random_grid(std::mt19937_64& rng, int w, int h) {
  Grid g{w, h, std::vector<int>(static_cast<std::size_t>(w) * h, 0)};
  const int rects = std::uniform_int_distribution<int>(0, 3)(rng);
  for (int r = 0; r < rects; ++r) {
    std::uniform_int_distribution<int> ux(0, w - 1), uy(0, h - 1);
    int x0 = ux(rng), x1 = ux(rng), y0 = uy(rng), y1 = uy(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) g.v[y * w + x] = 1;
  }
  // Salt noise so boundaries are not only axis-aligned.
  std::bernoulli_distribution flip(0.05);
  for (auto& b : g.v)
    if (flip(rng)) b ^= 1;
  return g;
}

}  // namespace egofields::oracle
