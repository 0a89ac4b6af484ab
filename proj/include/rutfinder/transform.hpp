#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rutfinder/grid.hpp"
#include "rutfinder/roadmodel.hpp"

namespace rutfinder {

/// Disparities re-expressed as distance below the road projection model,
/// offset by delta: d̃ = [1 y y²] alpha - d + delta.
struct TransformedMap {
  Grid<double> values;
  Mask valid;
  double delta = 30.0;
  RoadProjectionModel model;
};

/// Throws NegativeTransformError when any valid d̃ is negative.
TransformedMap transform_disparities(const DisparityMap& map, const RoadProjectionModel& model, double delta = 30.0);

struct OtsuResult {
  double threshold = 0.0;             ///< pixels with d̃ below it form the undamaged class
  double inter_class_variance = 0.0;  ///< P0 P1 (mu0 - mu1)²
  double p0 = 0.0;
  double p1 = 0.0;
  double mu0 = 0.0;
  double mu1 = 0.0;
  double range_min = 0.0;  ///< histogram covers [range_min, range_max]
  double range_max = 0.0;
  int bins = 0;
  Mask undamaged_mask;
};

/// Histogram split maximising the between-class variance.
///
/// counts[i] and sums[i] hold the number and value sum of the samples in
/// bin i. Returns the boundary b (class 0 = bins below b) as a possibly
/// half-integer value: when several consecutive boundaries reach the maximum
/// (empty bins between the classes), the middle of the first such run is
/// returned. Throws Error{Degenerate} when fewer than two bins are occupied.
struct OtsuSplit {
  double boundary = 0.0;
  int first = 0;  ///< lowest maximising boundary
  int last = 0;   ///< highest boundary of the same run
  double variance = 0.0;
};
OtsuSplit otsu_threshold(std::span<const std::int64_t> counts, std::span<const double> sums);

/// Otsu segmentation of the valid transformed disparities with uniform bins
/// over the observed range. Throws Error{Degenerate} on a constant map.
OtsuResult otsu_segment(const TransformedMap& tmap, int histogram_bins = 256);

}  // namespace rutfinder
