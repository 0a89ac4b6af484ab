#include "rutfinder/roadmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lsq.hpp"
#include "ransac.hpp"

namespace rutfinder {

YDisparityMap::YDisparityMap(double d_bin_width, int d_bin_min, int d_bin_count, int y_min, int row_count)
    : d_bin_width_(d_bin_width),
      d_bin_min_(d_bin_min),
      y_min_(y_min),
      counts_(d_bin_count, row_count, 0),
      sum_d_(d_bin_count, row_count, 0.0),
      sum_y_(d_bin_count, row_count, 0.0) {
  if (!(d_bin_width > 0.0)) throw Error(ErrorKind::InvalidArgument, "d_bin_width must be positive");
}

int YDisparityMap::count(int d_bin, int y_row) const noexcept {
  const int c = d_bin - d_bin_min_;
  const int r = y_row - y_min_;
  return counts_.contains(c, r) ? counts_(c, r) : 0;
}

void YDisparityMap::add(int d_bin, int y_row, double d, double y) noexcept {
  const int c = d_bin - d_bin_min_;
  const int r = y_row - y_min_;
  if (!counts_.contains(c, r)) return;
  ++counts_(c, r);
  sum_d_(c, r) += d;
  sum_y_(c, r) += y;
  ++total_;
}

YDisparityMap build_ydisparity(const DisparityMap& map, double theta, double d_bin_width,
                               std::optional<std::pair<int, int>> d_bin_range) {
  if (!(d_bin_width > 0.0)) throw Error(ErrorKind::InvalidArgument, "d_bin_width must be positive", "ydisparity");
  if (map.valid_count() == 0) throw Error(ErrorKind::EmptyMap, "no valid disparities", "ydisparity");

  struct Entry {
    int bin;
    int row;
    double d;
    double y;
  };
  std::vector<Entry> entries;
  entries.reserve(map.valid_count());
  int bmin = std::numeric_limits<int>::max();
  int bmax = std::numeric_limits<int>::min();
  int rmin = bmin;
  int rmax = bmax;
  const Rotation rot(theta);
  const double u0 = 0.5 * (map.width() - 1);
  const double v0 = 0.5 * (map.height() - 1);
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (!map.valid(c, r)) continue;
      const double d = map.at(c, r);
      const double y = rot.y(c - u0, r - v0);
      const Entry e{static_cast<int>(std::lround(d / d_bin_width)), static_cast<int>(std::lround(y)), d, y};
      if (d_bin_range && (e.bin < d_bin_range->first || e.bin > d_bin_range->second)) continue;
      bmin = std::min(bmin, e.bin);
      bmax = std::max(bmax, e.bin);
      rmin = std::min(rmin, e.row);
      rmax = std::max(rmax, e.row);
      entries.push_back(e);
    }
  }
  if (d_bin_range) {
    if (d_bin_range->first > d_bin_range->second) {
      throw Error(ErrorKind::InvalidArgument, "empty disparity bin range", "ydisparity");
    }
    bmin = d_bin_range->first;
    bmax = d_bin_range->second;
  }
  if (entries.empty()) throw Error(ErrorKind::EmptyMap, "no disparities inside the bin range", "ydisparity");

  YDisparityMap out(d_bin_width, bmin, bmax - bmin + 1, rmin, rmax - rmin + 1);
  for (const auto& e : entries) out.add(e.bin, e.row, e.d, e.y);
  return out;
}

TargetPath TargetPath::populated() const {
  TargetPath out;
  out.energy = energy;
  for (const auto& p : points) {
    if (p.count > 0) out.points.push_back(p);
  }
  return out;
}

TargetPath extract_path(const YDisparityMap& ydisp, double lambda, int tau_max) {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be non-negative", "path");
  if (tau_max < 1) throw Error(ErrorKind::InvalidArgument, "tau_max must be at least 1", "path");
  if (ydisp.total() == 0) throw Error(ErrorKind::EmptyMap, "y-disparity histogram is empty", "path");

  const Grid<int>& m = ydisp.counts();
  const int nb = m.width();
  const int nr = m.height();
  Grid<double> e(nb, nr, 0.0);
  Grid<int> step(nb, nr, 0);

  for (int r = 0; r < nr; ++r) e(nb - 1, r) = -m(nb - 1, r);
  for (int b = nb - 1; b-- > 0;) {
    for (int r = 0; r < nr; ++r) {
      double best = std::numeric_limits<double>::infinity();
      int best_tau = 0;
      const int reach = std::min(tau_max, nr - 1 - r);
      for (int tau = 0; tau <= reach; ++tau) {
        const double cand = e(b + 1, r + tau) + lambda * tau;
        if (cand < best) {
          best = cand;
          best_tau = tau;
        }
      }
      e(b, r) = -m(b, r) + best;
      step(b, r) = best_tau;
    }
  }

  int row = 0;
  for (int r = 1; r < nr; ++r) {
    if (e(0, r) < e(0, row)) row = r;
  }

  TargetPath path;
  path.energy = e(0, row);
  path.points.reserve(nb);
  for (int b = 0; b < nb; ++b) {
    PathPoint p;
    p.d_bin = ydisp.d_bin_min() + b;
    p.y_row = ydisp.y_min() + row;
    p.count = m(b, row);
    if (p.count > 0) {
      p.d = ydisp.sum_d()(b, row) / p.count;
      p.y = ydisp.sum_y()(b, row) / p.count;
    } else {
      p.d = ydisp.bin_center(p.d_bin);
      p.y = p.y_row;
    }
    path.points.push_back(p);
    row += step(b, row);
  }
  return path;
}

double path_energy(const YDisparityMap& ydisp, const TargetPath& path, double lambda) {
  double total = 0.0;
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const auto& p = path.points[i];
    total -= ydisp.count(p.d_bin, p.y_row);
    if (i > 0) total += lambda * (p.y_row - path.points[i - 1].y_row);
  }
  return total;
}

namespace {

struct ParabolaFit {
  std::array<double, 3> alpha{};
  bool ok = false;
};

// Least-squares d = a0 + a1 y + a2 y² over the given points, with y scaled
// to unit range for conditioning.
template <class Range>
ParabolaFit fit_parabola(const std::vector<PathPoint>& pts, const Range& idx) {
  double scale = 0.0;
  std::size_t n = 0;
  for (std::size_t i : idx) {
    scale = std::max(scale, std::abs(pts[i].y));
    ++n;
  }
  ParabolaFit fit;
  if (n < 3) return fit;
  std::vector<double> ys;
  for (std::size_t i : idx) ys.push_back(pts[i].y);
  std::sort(ys.begin(), ys.end());
  if (std::unique(ys.begin(), ys.end()) - ys.begin() < 3) return fit;
  if (scale == 0.0) scale = 1.0;
  const double inv = 1.0 / scale;
  detail::StreamingLeastSquares lsq(3, 64);
  for (std::size_t i : idx) {
    const double y = pts[i].y * inv;
    const double row[3] = {1.0, y, y * y};
    lsq.add_row(row, pts[i].d);
  }
  const auto sol = lsq.solve(1e-12);
  if (!sol.full_rank()) return fit;
  fit.alpha = {sol.x[0], sol.x[1] * inv, sol.x[2] * inv * inv};
  fit.ok = true;
  return fit;
}

double residual(const std::array<double, 3>& a, const PathPoint& p) {
  return std::abs(p.d - (a[0] + a[1] * p.y + a[2] * p.y * p.y));
}

}  // namespace

RoadProjectionModel estimate_alpha(const TargetPath& path, double theta, const AlphaRansacOptions& opt) {
  if (opt.iterations < 1) throw Error(ErrorKind::InvalidArgument, "iteration count must be positive", "alpha");
  if (opt.sample_size < 3) throw Error(ErrorKind::InvalidArgument, "sample size must be at least 3", "alpha");
  if (opt.halvings < 1) throw Error(ErrorKind::InvalidArgument, "halvings must be at least 1", "alpha");
  if (!(opt.eps_alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps_alpha must be positive", "alpha");
  const auto& pts = path.points;
  if (pts.size() < static_cast<std::size_t>(opt.sample_size)) {
    throw Error(ErrorKind::Degenerate, "target path has fewer points than the sample size", "alpha");
  }

  std::vector<double> tol(opt.halvings);
  for (int j = 0; j < opt.halvings; ++j) tol[j] = opt.eps_alpha / std::ldexp(1.0, j);

  std::mt19937_64 rng(opt.seed);
  std::vector<std::size_t> all(pts.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<std::size_t> sample(opt.sample_size);

  std::vector<detail::RansacTrial> trials;
  trials.reserve(opt.iterations);
  const long max_attempts = 10L * opt.iterations;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(trials.size()) < opt.iterations; ++attempt) {
    std::sample(all.begin(), all.end(), sample.begin(), opt.sample_size, rng);
    const ParabolaFit fit = fit_parabola(pts, sample);
    if (!fit.ok) continue;
    detail::RansacTrial t;
    t.params.assign(fit.alpha.begin(), fit.alpha.end());
    for (double e : tol) {
      std::size_t in = 0;
      for (const auto& p : pts) in += residual(fit.alpha, p) <= e;
      t.eta.push_back(detail::inlier_ratio(in, pts.size() - in));
    }
    for (const auto& p : pts) {
      const double r = residual(fit.alpha, p);
      if (r <= tol.back()) t.residual_sum += r;
    }
    trials.push_back(std::move(t));
  }
  if (trials.empty()) throw Error(ErrorKind::Degenerate, "every alpha trial was degenerate", "alpha");

  const auto choice = detail::select_trial(trials);
  RoadProjectionModel model;
  model.theta = theta;
  model.accepted_column = choice.column;
  std::copy_n(trials[choice.trial].params.begin(), 3, model.alpha.begin());

  auto inliers_of = [&](const std::array<double, 3>& a) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (residual(a, pts[i]) <= tol.back()) in.push_back(i);
    }
    return in;
  };

  std::vector<std::size_t> in = inliers_of(model.alpha);
  if (opt.refine) {
    const ParabolaFit fit = fit_parabola(pts, in);
    if (fit.ok) {
      auto refined_in = inliers_of(fit.alpha);
      // Keep the refit only if it does not lose consensus.
      if (refined_in.size() >= in.size()) {
        model.alpha = fit.alpha;
        in = std::move(refined_in);
      }
    }
  }
  model.inliers = in.size();
  model.inlier_ratio = detail::inlier_ratio(in.size(), pts.size() - in.size());
  return model;
}

}  // namespace rutfinder
