#pragma once

// Independent reference implementations shared by the unit and acceptance
// tests. Deliberately naive.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "rutfinder/grid.hpp"
#include "rutfinder/roadmodel.hpp"

namespace oracle {

using rutfinder::Grid;
using rutfinder::Mask;
using rutfinder::YDisparityMap;

/// Exhaustive minimum of sum(-m(d, y_d)) + lambda * sum(y_{d+1} - y_d) over
/// every row sequence with steps in [0, tau_max].
inline double dp_min_energy(const YDisparityMap& h, double lambda, int tau_max) {
  const int nb = h.d_bin_count();
  const int rows = h.row_count();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> ys(nb);
  auto rec = [&](auto&& self, int b, double acc) -> void {
    if (b == nb) {
      best = std::min(best, acc);
      return;
    }
    const int lo = b == 0 ? 0 : ys[b - 1];
    const int hi = b == 0 ? rows - 1 : std::min(rows - 1, ys[b - 1] + tau_max);
    for (int y = lo; y <= hi; ++y) {
      ys[b] = y;
      const double step = b == 0 ? 0.0 : lambda * (y - ys[b - 1]);
      self(self, b + 1, acc - h.count(h.d_bin_min() + b, h.y_min() + y) + step);
    }
  };
  rec(rec, 0, 0.0);
  return best;
}

inline YDisparityMap random_ydisparity(std::mt19937_64& rng, int nb, int rows) {
  YDisparityMap h(1.0, 0, nb, 0, rows);
  std::uniform_int_distribution<int> cnt(0, 6);
  for (int b = 0; b < nb; ++b) {
    for (int y = 0; y < rows; ++y) {
      const int n = cnt(rng) == 0 ? cnt(rng) * 3 : cnt(rng) / 3;
      for (int k = 0; k < n; ++k) h.add(b, y, b, y);
    }
  }
  return h;
}

/// Boundaries maximising the inter-class variance of a histogram whose bin
/// b holds the value b, with exact integer arithmetic. At boundary k the
/// variance is (n1 S0 - n0 S1)² / (N² n0 n1).
inline std::set<int> otsu_argmax(const std::vector<std::int64_t>& counts) {
  using i128 = __int128;
  std::int64_t n = 0, s = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    n += counts[b];
    s += counts[b] * static_cast<std::int64_t>(b);
  }
  std::set<int> best;
  i128 best_num = -1, best_den = 1;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    std::int64_t n0 = 0, s0 = 0;
    for (std::size_t b = 0; b < k; ++b) {
      n0 += counts[b];
      s0 += counts[b] * static_cast<std::int64_t>(b);
    }
    const std::int64_t n1 = n - n0, s1 = s - s0;
    if (n0 == 0 || n1 == 0) continue;
    const i128 diff = static_cast<i128>(n1) * s0 - static_cast<i128>(n0) * s1;
    const i128 num = diff * diff;
    const i128 den = static_cast<i128>(n0) * n1;
    const i128 lhs = num * best_den, rhs = best_num * den;
    if (best_num < 0 || lhs > rhs) {
      best = {static_cast<int>(k)};
      best_num = num;
      best_den = den;
    } else if (lhs == rhs) {
      best.insert(static_cast<int>(k));
    }
  }
  return best;
}

/// Flood fill from seed over pixels where pass(i) holds; returns visited flags.
template <class Pass>
std::vector<char> flood(int w, int h, std::vector<int> seeds, bool eight, Pass pass) {
  std::vector<char> seen(static_cast<std::size_t>(w) * h, 0);
  std::deque<int> q;
  for (int s : seeds) {
    if (pass(s) && !seen[s]) {
      seen[s] = 1;
      q.push_back(s);
    }
  }
  while (!q.empty()) {
    const int i = q.front();
    q.pop_front();
    const int c = i % w, r = i / w;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if ((dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0)) continue;
        const int cc = c + dc, rr = r + dr;
        if (cc < 0 || rr < 0 || cc >= w || rr >= h) continue;
        const int j = rr * w + cc;
        if (!seen[j] && pass(j)) {
          seen[j] = 1;
          q.push_back(j);
        }
      }
    }
  }
  return seen;
}

/// Reference for clean_and_label: 8-connected components of at least
/// min_pixels, each grown by the background it encloses (background not
/// 4-connected to the image border once the component is removed), nested
/// regions merged into the outermost one, labels 1..N by first raster pixel.
inline Grid<int> clean_and_label(const Mask& m, std::size_t min_pixels) {
  const int w = m.width(), h = m.height();
  const int n = w * h;
  std::vector<int> border;
  for (int c = 0; c < w; ++c) border.insert(border.end(), {c, (h - 1) * w + c});
  for (int r = 0; r < h; ++r) border.insert(border.end(), {r * w, r * w + w - 1});

  std::vector<char> done(n, 0);
  std::vector<std::vector<char>> fills;
  for (int i = 0; i < n; ++i) {
    if (!m[i] || done[i]) continue;
    const auto comp = flood(w, h, {i}, true, [&](int j) { return m[j] != 0; });
    std::size_t size = 0;
    for (int j = 0; j < n; ++j) {
      if (comp[j]) {
        done[j] = 1;
        ++size;
      }
    }
    if (size < min_pixels) continue;
    const auto outside = flood(w, h, border, false, [&](int j) { return !comp[j]; });
    std::vector<char> fill(n, 0);
    for (int j = 0; j < n; ++j) fill[j] = comp[j] || !outside[j];
    fills.push_back(std::move(fill));
  }
  // A region is dropped when another region's fill covers it entirely.
  std::vector<char> nested(fills.size(), 0);
  for (std::size_t a = 0; a < fills.size(); ++a) {
    for (std::size_t b = 0; b < fills.size(); ++b) {
      if (a == b) continue;
      bool inside = true;
      for (int j = 0; j < n && inside; ++j) inside = !fills[a][j] || fills[b][j];
      if (inside) nested[a] = 1;
    }
  }
  std::vector<std::pair<int, std::size_t>> order;
  for (std::size_t a = 0; a < fills.size(); ++a) {
    if (nested[a]) continue;
    const int first = static_cast<int>(std::find(fills[a].begin(), fills[a].end(), 1) - fills[a].begin());
    order.push_back({first, a});
  }
  std::sort(order.begin(), order.end());
  Grid<int> labels(w, h, 0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (int j = 0; j < n; ++j) {
      if (fills[order[k].second][j]) labels[j] = static_cast<int>(k) + 1;
    }
  }
  return labels;
}

/// Random mask mixing speckle, filled blobs and rings, so that holes,
/// nesting and small fragments all occur.
inline Mask ccl_mask(std::mt19937_64& rng, int w, int h) {
  Mask m(w, h, 0);
  std::bernoulli_distribution speck(std::uniform_real_distribution<double>(0.05, 0.5)(rng));
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = speck(rng);
  const int shapes = static_cast<int>(rng() % 6);
  for (int s = 0; s < shapes; ++s) {
    const int cx = static_cast<int>(rng() % w), cy = static_cast<int>(rng() % h);
    const int r_out = 3 + static_cast<int>(rng() % 14);
    const int r_in = rng() % 2 ? static_cast<int>(rng() % r_out) : -1;
    const bool value = rng() % 4 != 0;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const int d2 = (c - cx) * (c - cx) + (r - cy) * (r - cy);
        if (d2 <= r_out * r_out && d2 > r_in * r_in) m(c, r) = value;
      }
    }
  }
  return m;
}

}  // namespace oracle
