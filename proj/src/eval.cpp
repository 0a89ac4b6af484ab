#include "rutfinder/eval.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

#include "parallel.hpp"
#include "rutfinder/detect.hpp"

namespace rutfinder {

double sigma_d(std::span<const double> values) {
  if (values.size() < 2) throw Error(ErrorKind::InvalidArgument, "sigma_d needs at least two values", "eval");
  // Welford update; numerically safe for large constant offsets.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : values) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  return std::sqrt(m2 / static_cast<double>(n));
}

void MetricsReport::finalize() {
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  precision = ratio(tp, tp + fp);
  recall = ratio(tp, tp + fn);
  accuracy = ratio(tp + tn, total());
  f_score.reset();
  if (precision && recall && *precision + *recall > 0.0) {
    f_score = 2.0 * *precision * *recall / (*precision + *recall);
  }
}

MetricsReport& MetricsReport::operator+=(const MetricsReport& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  finalize();
  return *this;
}

MetricsReport pixel_metrics(const Mask& pred, const Mask& gt, const Mask& eval_mask) {
  if (!pred.same_shape(gt) || !pred.same_shape(eval_mask)) {
    throw Error(ErrorKind::InvalidArgument, "prediction, ground truth and evaluation mask differ in shape", "eval");
  }
  MetricsReport m;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!eval_mask[i]) continue;
    const bool p = pred[i] != 0;
    const bool g = gt[i] != 0;
    if (p && g) ++m.tp;
    else if (p) ++m.fp;
    else if (g) ++m.fn;
    else ++m.tn;
  }
  m.finalize();
  return m;
}

SweepFrame SweepFrame::from(const DisparityMap& map, const QuadraticSurface& surface, int expected) {
  SweepFrame f{Grid<double>(map.width(), map.height(), std::numeric_limits<double>::quiet_NaN()), expected};
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (map.valid(c, r)) f.depth(c, r) = surface.evaluate(map.centered(c, r)) - map.at(c, r);
    }
  }
  return f;
}

SweepResult param_sweep(std::span<const SweepFrame> frames, const SweepRanges& ranges, int threads) {
  if (frames.empty()) throw Error(ErrorKind::InvalidArgument, "sweep needs at least one frame", "sweep");
  if (ranges.eps_count < 1 || ranges.w_count < 1 || ranges.w_first < 1 || ranges.w_step < 0 ||
      ranges.eps_first_tenths < 1) {
    throw Error(ErrorKind::InvalidArgument, "bad sweep ranges", "sweep");
  }
  SweepResult res{ranges, Grid<long>(ranges.w_count, ranges.eps_count, 0), 0, {}};

  // One component analysis per (eps, frame) answers every w at once.
  const std::size_t jobs = static_cast<std::size_t>(ranges.eps_count);
  detail::parallel_chunks(jobs, detail::resolve_threads(threads), [&](int, std::size_t e0, std::size_t e1) {
    for (std::size_t e = e0; e < e1; ++e) {
      const double eps = ranges.eps(static_cast<int>(e));
      for (const auto& f : frames) {
        Mask m(f.depth.width(), f.depth.height(), 0);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = f.depth[i] > eps;  // NaN compares false
        const ComponentAnalysis a = analyze_components(m);
        for (int j = 0; j < ranges.w_count; ++j) {
          const long n = static_cast<long>(count_regions(a, ranges.w(j)));
          res.total(j, static_cast<int>(e)) += std::labs(n - f.expected);
        }
      }
    }
  });

  res.best = std::numeric_limits<long>::max();
  for (int e = 0; e < ranges.eps_count; ++e) {
    for (int j = 0; j < ranges.w_count; ++j) res.best = std::min(res.best, res.total(j, e));
  }
  for (int e = 0; e < ranges.eps_count; ++e) {
    for (int j = 0; j < ranges.w_count; ++j) {
      if (res.total(j, e) == res.best) res.argmin.push_back({ranges.eps(e), ranges.w(j)});
    }
  }
  return res;
}

}  // namespace rutfinder
