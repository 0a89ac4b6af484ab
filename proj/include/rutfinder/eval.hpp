#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rutfinder/grid.hpp"
#include "rutfinder/surface.hpp"

namespace rutfinder {

/// Population standard deviation. Throws with fewer than two values.
double sigma_d(std::span<const double> values);

/// Pixel confusion counts and derived ratios. A ratio whose denominator is
/// zero is left empty.
struct MetricsReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::optional<double> precision, recall, f_score, accuracy;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  /// Recomputes the ratios from the counts.
  void finalize();
  MetricsReport& operator+=(const MetricsReport& other);
};

/// Counts over pixels where eval_mask is set.
MetricsReport pixel_metrics(const Mask& pred, const Mask& gt, const Mask& eval_mask);

/// Cached per-frame input to the parameter sweep: the residual g - d of
/// every valid pixel (NaN elsewhere) and the expected pothole count.
struct SweepFrame {
  Grid<double> depth;
  int expected = 0;

  static SweepFrame from(const DisparityMap& map, const QuadraticSurface& surface, int expected);
};

struct SweepRanges {
  int eps_first_tenths = 30;  ///< eps_d = tenths / 10
  int eps_count = 56;
  int w_first = 100;
  int w_step = 100;
  int w_count = 50;

  double eps(int i) const noexcept { return (eps_first_tenths + i) / 10.0; }
  std::size_t w(int j) const noexcept { return static_cast<std::size_t>(w_first + j * w_step); }
};

struct SweepCell {
  double eps_d = 0.0;
  std::size_t w = 0;
};

struct SweepResult {
  SweepRanges ranges;
  /// Summed |detected - expected| with eps index as row, w index as column.
  Grid<long> total;
  long best = 0;
  std::vector<SweepCell> argmin;  ///< every cell reaching `best`, row-major
};

SweepResult param_sweep(std::span<const SweepFrame> frames, const SweepRanges& ranges = {}, int threads = 0);

}  // namespace rutfinder
