#include "rutfinder/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rutfinder {

TransformedMap transform_disparities(const DisparityMap& map, const RoadProjectionModel& model, double delta) {
  for (double a : model.alpha) {
    if (!std::isfinite(a)) throw Error(ErrorKind::InvalidArgument, "road model has non-finite coefficients", "transform");
  }
  if (!std::isfinite(delta)) throw Error(ErrorKind::InvalidArgument, "delta must be finite", "transform");

  TransformedMap out{Grid<double>(map.width(), map.height(), 0.0), map.valid_mask(), delta, model};
  std::size_t negative = 0;
  double minimum = std::numeric_limits<double>::infinity();
  const Rotation rot(model.theta);
  const double u0 = 0.5 * (map.width() - 1);
  const double v0 = 0.5 * (map.height() - 1);
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (!map.valid(c, r)) continue;
      const double v = model.evaluate(rot.y(c - u0, r - v0)) - map.at(c, r) + delta;
      out.values(c, r) = v;
      if (v < 0.0) {
        ++negative;
        minimum = std::min(minimum, v);
      }
    }
  }
  if (negative > 0) throw NegativeTransformError(negative, minimum);
  return out;
}

OtsuSplit otsu_threshold(std::span<const std::int64_t> counts, std::span<const double> sums) {
  if (counts.size() != sums.size()) throw Error(ErrorKind::InvalidArgument, "counts and sums differ in length", "otsu");
  const int n = static_cast<int>(counts.size());
  std::int64_t total = 0;
  double total_sum = 0.0;
  int occupied = 0;
  for (int i = 0; i < n; ++i) {
    if (counts[i] < 0) throw Error(ErrorKind::InvalidArgument, "negative histogram count", "otsu");
    total += counts[i];
    total_sum += sums[i];
    occupied += counts[i] > 0;
  }
  if (occupied < 2) throw Error(ErrorKind::Degenerate, "histogram has fewer than two occupied bins", "otsu");

  OtsuSplit best;
  best.variance = -1.0;
  bool in_run = false;
  std::int64_t n0 = 0;
  double s0 = 0.0;
  for (int b = 1; b < n; ++b) {
    n0 += counts[b - 1];
    s0 += sums[b - 1];
    const std::int64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) {
      in_run = false;
      continue;
    }
    const double p0 = static_cast<double>(n0) / total;
    const double p1 = static_cast<double>(n1) / total;
    const double diff = s0 / n0 - (total_sum - s0) / n1;
    const double var = p0 * p1 * diff * diff;
    if (var > best.variance) {
      best.variance = var;
      best.first = best.last = b;
      in_run = true;
    } else if (in_run && var == best.variance && best.last == b - 1) {
      best.last = b;
    } else {
      in_run = false;
    }
  }
  best.boundary = 0.5 * (best.first + best.last);
  return best;
}

OtsuResult otsu_segment(const TransformedMap& tmap, int bins) {
  if (bins < 2) throw Error(ErrorKind::InvalidArgument, "Otsu needs at least two bins", "otsu");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const std::size_t n = tmap.values.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!tmap.valid[i]) continue;
    lo = std::min(lo, tmap.values[i]);
    hi = std::max(hi, tmap.values[i]);
  }
  if (!(lo <= hi)) throw Error(ErrorKind::EmptyMap, "no valid transformed disparities", "otsu");
  if (lo == hi) throw Error(ErrorKind::Degenerate, "transformed disparities are constant", "otsu");

  const double width = (hi - lo) / bins;
  auto bin_of = [&](double v) { return std::min(bins - 1, static_cast<int>((v - lo) / width)); };
  std::vector<std::int64_t> counts(bins, 0);
  std::vector<double> sums(bins, 0.0);
  std::vector<int> pixel_bin(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!tmap.valid[i]) continue;
    const int b = bin_of(tmap.values[i]);
    pixel_bin[i] = b;
    ++counts[b];
    sums[b] += tmap.values[i];
  }

  const OtsuSplit split = otsu_threshold(counts, sums);
  OtsuResult res;
  res.range_min = lo;
  res.range_max = hi;
  res.bins = bins;
  res.threshold = lo + split.boundary * width;
  res.inter_class_variance = split.variance;
  res.undamaged_mask = Mask(tmap.values.width(), tmap.values.height(), 0);

  std::int64_t n0 = 0;
  std::int64_t total = 0;
  double s0 = 0.0;
  double total_sum = 0.0;
  for (int b = 0; b < bins; ++b) {
    total += counts[b];
    total_sum += sums[b];
    if (b < split.first) {
      n0 += counts[b];
      s0 += sums[b];
    }
  }
  res.p0 = static_cast<double>(n0) / total;
  res.p1 = 1.0 - res.p0;
  res.mu0 = s0 / n0;
  res.mu1 = (total_sum - s0) / (total - n0);
  for (std::size_t i = 0; i < n; ++i) {
    if (pixel_bin[i] >= 0 && pixel_bin[i] < split.first) res.undamaged_mask[i] = 1;
  }
  return res;
}

}  // namespace rutfinder
