#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rutfinder/grid.hpp"

namespace rutfinder {

/// Per-row disparity histogram of the rotated map.
///
/// Cells are addressed by absolute disparity bin (round(d / d_bin_width))
/// and absolute rotated row (round(y)). Each cell also accumulates the
/// disparity and y of the pixels it counts so callers can recover subpixel
/// centroids.
class YDisparityMap {
 public:
  YDisparityMap(double d_bin_width, int d_bin_min, int d_bin_count, int y_min, int row_count);

  double d_bin_width() const noexcept { return d_bin_width_; }
  int d_bin_min() const noexcept { return d_bin_min_; }
  int d_bin_max() const noexcept { return d_bin_min_ + counts_.width() - 1; }
  int d_bin_count() const noexcept { return counts_.width(); }
  int y_min() const noexcept { return y_min_; }
  int y_max() const noexcept { return y_min_ + counts_.height() - 1; }
  int row_count() const noexcept { return counts_.height(); }

  /// Count at an absolute (bin, row); zero outside the covered range.
  int count(int d_bin, int y_row) const noexcept;
  double bin_center(int d_bin) const noexcept { return d_bin * d_bin_width_; }

  /// Grid indexed (bin - d_bin_min, row - y_min).
  const Grid<int>& counts() const noexcept { return counts_; }
  const Grid<double>& sum_d() const noexcept { return sum_d_; }
  const Grid<double>& sum_y() const noexcept { return sum_y_; }
  std::size_t total() const noexcept { return total_; }

  void add(int d_bin, int y_row, double d, double y) noexcept;

 private:
  double d_bin_width_;
  int d_bin_min_;
  int y_min_;
  Grid<int> counts_;
  Grid<double> sum_d_;
  Grid<double> sum_y_;
  std::size_t total_ = 0;
};

/// Histograms every valid pixel by (rounded disparity bin, rounded rotated
/// row). An explicit inclusive bin range drops pixels outside it; by default
/// the observed range is used.
YDisparityMap build_ydisparity(const DisparityMap& map, double theta, double d_bin_width = 1.0,
                               std::optional<std::pair<int, int>> d_bin_range = std::nullopt);

struct PathPoint {
  int d_bin = 0;
  int y_row = 0;
  int count = 0;
  double d = 0.0;  ///< mean disparity of the cell, or the bin centre when empty
  double y = 0.0;  ///< mean rotated row of the cell, or the row itself when empty
};

/// Minimal-energy road path through the y-disparity map, one point per
/// disparity bin from d_bin_min to d_bin_max.
struct TargetPath {
  std::vector<PathPoint> points;
  double energy = 0.0;

  /// Points whose cell holds at least one pixel.
  TargetPath populated() const;
};

/// Dynamic programming over disparity bins:
///   E(d, y) = -m(d, y) + min_{0 <= tau <= tau_max} [E(d+1, y+tau) + lambda tau]
/// evaluated backwards from the largest bin, then backtracked from the best
/// row of the smallest bin. Ties prefer the smaller row and smaller step.
TargetPath extract_path(const YDisparityMap& ydisp, double lambda = 16.0, int tau_max = 10);

/// Energy of an arbitrary monotone path under the same cost.
double path_energy(const YDisparityMap& ydisp, const TargetPath& path, double lambda);

struct RoadProjectionModel {
  std::array<double, 3> alpha{};  ///< d = alpha0 + alpha1 y + alpha2 y²
  double theta = 0.0;
  double inlier_ratio = 0.0;  ///< +inf when the accepted trial had no outliers
  int accepted_column = 0;    ///< tolerance column that resolved the choice; 0 = tie-break
  std::size_t inliers = 0;    ///< path points within the final tolerance

  double evaluate(double y) const noexcept { return alpha[0] + alpha[1] * y + alpha[2] * y * y; }
  /// Model disparity at centered coordinates, rotated by theta.
  double evaluate(CenteredCoords c) const noexcept { return evaluate(rotate_coords(c, theta).y); }
};

struct AlphaRansacOptions {
  int iterations = 50;
  int sample_size = 3;
  double eps_alpha = 4.0;
  int halvings = 4;
  std::uint64_t seed = 42;
  /// Refit the parabola by least squares over the final-tolerance inliers
  /// of the accepted trial.
  bool refine = true;
};

/// RANSAC fit of the road projection parabola to the path points.
RoadProjectionModel estimate_alpha(const TargetPath& path, double theta, const AlphaRansacOptions& options = {});

}  // namespace rutfinder
