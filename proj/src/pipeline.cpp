#include "rutfinder/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

#include <json.hpp>

#include "parallel.hpp"

namespace rutfinder {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Runs fn, tagging any untagged Error with the stage name.
template <class F>
auto staged(const char* stage, double* elapsed, F&& fn) {
  const auto t0 = Clock::now();
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      if (elapsed) *elapsed += ms_since(t0);
    } else {
      auto out = fn();
      if (elapsed) *elapsed += ms_since(t0);
      return out;
    }
  } catch (const NegativeTransformError&) {
    throw;
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw Error(e.kind(), e.detail(), stage);
  }
}

json eta_json(double eta) {
  if (std::isinf(eta)) return "inf";
  return eta;
}

// Otsu's undamaged class, trimmed to within three robust standard
// deviations of its median so shallow pothole rims drop out as well.
Mask road_roi(const DisparityMap& map, const RoadProjectionModel& model, const RunConfig& cfg) {
  try {
    const TransformedMap t = transform_disparities(map, model, cfg.delta);
    Mask roi = otsu_segment(t, cfg.otsu_bins).undamaged_mask;
    std::vector<double> vals;
    for (std::size_t i = 0; i < roi.size(); ++i) {
      if (roi[i]) vals.push_back(t.values[i]);
    }
    if (vals.size() < 3) return map.valid_mask();
    auto mid = vals.begin() + vals.size() / 2;
    std::nth_element(vals.begin(), mid, vals.end());
    const double median = *mid;
    for (double& v : vals) v = std::abs(v - median);
    std::nth_element(vals.begin(), mid, vals.end());
    const double band = 3.0 * 1.4826 * *mid;
    for (std::size_t i = 0; i < roi.size(); ++i) {
      if (roi[i] && std::abs(t.values[i] - median) > band) roi[i] = 0;
    }
    return roi;
  } catch (const Error&) {
    return map.valid_mask();
  }
}

}  // namespace

RoadEstimate estimate_road(const DisparityMap& map, const RunConfig& cfg, StageTimings* timings,
                           const Mask* roll_roi) {
  cfg.validate();
  RoadEstimate est;
  est.roll = staged("roll", timings ? &timings->roll : nullptr, [&] {
    RollOptions o;
    o.eps_theta = cfg.eps_theta;
    o.prescan_count = cfg.prescan_count;
    o.stride = cfg.roll_stride;
    o.roi = roll_roi;
    return estimate_roll(map, o);
  });
  staged("road_model", timings ? &timings->road_model : nullptr, [&] {
    est.ydisp = build_ydisparity(map, est.roll.theta, cfg.d_bin_width);
    est.path = extract_path(*est.ydisp, cfg.lambda, cfg.tau_max).populated();
    AlphaRansacOptions o;
    o.iterations = cfg.ransac_iterations;
    o.sample_size = cfg.sample_size;
    o.eps_alpha = cfg.eps_alpha;
    o.halvings = cfg.halvings;
    o.seed = cfg.seed;
    o.refine = cfg.refine;
    est.model = estimate_alpha(est.path, est.roll.theta, o);
  });
  return est;
}

DetectionResult detect_potholes(const DisparityMap& map, RoadEstimate road, const RunConfig& cfg) {
  cfg.validate();
  const auto t_start = Clock::now();
  DetectionResult res;
  res.road = std::move(road);
  StageTimings& tm = res.timings;
  const int threads = detail::resolve_threads(cfg.threads);

  res.delta_used = cfg.delta;
  staged("transform", &tm.transform, [&] {
    try {
      res.transformed = transform_disparities(map, res.road.model, res.delta_used);
    } catch (const NegativeTransformError& e) {
      // Otsu is shift invariant, so a larger offset changes nothing downstream.
      res.delta_used = cfg.delta + std::ceil(-e.minimum()) + 1.0;
      res.transformed = transform_disparities(map, res.road.model, res.delta_used);
    }
  });

  staged("otsu", &tm.otsu, [&] {
    try {
      res.otsu = otsu_segment(res.transformed, cfg.otsu_bins);
      res.undamaged = res.otsu->undamaged_mask;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Degenerate) throw;
      res.otsu.reset();
      res.undamaged = map.valid_mask();
    }
  });

  staged("normals", &tm.normals, [&] {
    res.normals = estimate_normals(map, res.undamaged, cfg.neighbors, threads);
    res.n_hat = optimal_normal(res.normals);
    res.surface_inliers = filter_by_normal(res.normals, res.n_hat, cfg.eps_n);
  });

  res.surface = staged("surface", &tm.surface, [&] {
    SurfaceFitOptions o;
    o.block_size = cfg.block_size;
    o.iterations = cfg.ransac_iterations;
    o.eps_c0 = cfg.eps_c0;
    o.halvings = cfg.halvings;
    o.seed = cfg.seed;
    o.refine = cfg.refine;
    o.threads = threads;
    return fit_surface(map, res.surface_inliers, o);
  });

  staged("detect", &tm.detect, [&] {
    res.residual = residual_mask(map, res.surface, cfg.eps_d);
    res.labels = clean_and_label(res.residual, static_cast<std::size_t>(cfg.min_pixels));
    measure_depths(res.labels, map, res.surface);
  });
  tm.total = tm.roll + tm.road_model + ms_since(t_start);
  return res;
}

DetectionResult run_pipeline(const DisparityMap& map, const RunConfig& cfg) {
  StageTimings tm;
  RoadEstimate road = estimate_road(map, cfg, &tm);
  for (int pass = 0; pass < cfg.roll_refine; ++pass) {
    // Damaged pixels pull the roll estimate; redo it on pixels that sit
    // close to the current road model.
    Mask roi = map.valid_mask();
    staged("roll", &tm.roll, [&] { roi = road_roi(map, road.model, cfg); });
    road = estimate_road(map, cfg, &tm, &roi);
  }
  DetectionResult res = detect_potholes(map, std::move(road), cfg);
  res.timings.roll = tm.roll;
  res.timings.road_model = tm.road_model;
  res.timings.total += tm.roll + tm.road_model;
  return res;
}

namespace {

json config_section(const RunConfig& cfg) {
  json c = json::parse(cfg.to_json());
  c.erase("threads");
  return c;
}

json roll_section(const RollEstimate& r) {
  return {{"theta", r.theta},
          {"energy", r.energy},
          {"iterations", r.iterations},
          {"initial_width", r.initial_width},
          {"final_width", r.bracket_widths.empty() ? r.initial_width : r.bracket_widths.back()}};
}

}  // namespace

std::string report_json(const DetectionResult& r, const RunConfig& cfg, const std::string& input,
                        bool include_runtime) {
  json j;
  if (!input.empty()) j["input"] = input;
  j["config"] = config_section(cfg);
  j["seed"] = cfg.seed;
  j["roll"] = roll_section(r.road.roll);
  j["road_model"] = {{"alpha", r.road.model.alpha},
                     {"theta", r.road.model.theta},
                     {"inlier_ratio", eta_json(r.road.model.inlier_ratio)},
                     {"accepted_column", r.road.model.accepted_column},
                     {"inliers", r.road.model.inliers},
                     {"path_points", r.road.path.points.size()},
                     {"path_energy", r.road.path.energy}};
  j["transform"] = {{"delta", r.delta_used}};
  if (r.otsu) {
    const auto& o = *r.otsu;
    j["otsu"] = {{"threshold", o.threshold}, {"inter_class_variance", o.inter_class_variance},
                 {"p0", o.p0}, {"p1", o.p1}, {"mu0", o.mu0}, {"mu1", o.mu1},
                 {"range", {o.range_min, o.range_max}}, {"bins", o.bins}};
  } else {
    j["otsu"] = nullptr;
  }
  j["undamaged_pixels"] = count_set(r.undamaged);
  j["normals"] = {{"count", r.normals.count()},
                  {"n_hat", r.n_hat.n_hat},
                  {"phi1", r.n_hat.phi1},
                  {"phi2", r.n_hat.phi2},
                  {"energy", r.n_hat.energy},
                  {"kept", count_set(r.surface_inliers)}};
  j["surface"] = {{"c", r.surface.c},
                  {"inlier_ratio", eta_json(r.surface.inlier_ratio)},
                  {"tolerance_final", r.surface.tolerance_final},
                  {"block_size", r.surface.block_size},
                  {"accepted_column", r.surface.accepted_column},
                  {"inliers", r.surface.inliers}};
  j["eps_d"] = cfg.eps_d;
  j["min_pixels"] = cfg.min_pixels;
  j["residual_pixels"] = count_set(r.residual);
  j["pothole_count"] = r.labels.count();
  j["potholes"] = json::array();
  for (const auto& s : r.labels.stats) {
    j["potholes"].push_back({{"label", s.label},
                             {"pixels", s.pixels},
                             {"bbox", {s.bbox.col0, s.bbox.row0, s.bbox.col1, s.bbox.row1}},
                             {"mean_depth", s.mean_depth},
                             {"max_depth", s.max_depth}});
  }
  if (!include_runtime) return j.dump(2);
  const auto& t = r.timings;
  j["runtime"] = {{"threads", detail::resolve_threads(cfg.threads)},
                  {"timings_ms",
                   {{"roll", t.roll}, {"road_model", t.road_model}, {"transform", t.transform}, {"otsu", t.otsu},
                    {"normals", t.normals}, {"surface", t.surface}, {"detect", t.detect}, {"total", t.total}}}};
  return j.dump(2);
}

std::string roll_report_json(const RollEstimate& roll, const RunConfig& cfg, const std::string& input) {
  json j;
  if (!input.empty()) j["input"] = input;
  j["config"] = config_section(cfg);
  j["seed"] = cfg.seed;
  j["roll"] = roll_section(roll);
  j["roll"]["bracket_widths"] = roll.bracket_widths;
  return j.dump(2);
}

}  // namespace rutfinder
