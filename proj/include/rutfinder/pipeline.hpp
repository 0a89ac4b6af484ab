#pragma once

#include <optional>
#include <string>

#include "rutfinder/config.hpp"
#include "rutfinder/detect.hpp"
#include "rutfinder/grid.hpp"
#include "rutfinder/roadmodel.hpp"
#include "rutfinder/rollangle.hpp"
#include "rutfinder/surface.hpp"
#include "rutfinder/transform.hpp"

namespace rutfinder {

/// Wall-clock milliseconds per stage.
struct StageTimings {
  double roll = 0.0;
  double road_model = 0.0;
  double transform = 0.0;
  double otsu = 0.0;
  double normals = 0.0;
  double surface = 0.0;
  double detect = 0.0;
  double total = 0.0;
};

struct RoadEstimate {
  RollEstimate roll;
  TargetPath path;  ///< populated cells only
  RoadProjectionModel model;
  std::optional<YDisparityMap> ydisp;
};

/// Roll angle, y-disparity path and road projection parabola. An optional
/// region of interest restricts the roll estimate.
RoadEstimate estimate_road(const DisparityMap& map, const RunConfig& config, StageTimings* timings = nullptr,
                           const Mask* roll_roi = nullptr);

struct DetectionResult {
  RoadEstimate road;
  TransformedMap transformed;
  /// Empty when the transformed map was constant; every valid pixel is then
  /// treated as undamaged.
  std::optional<OtsuResult> otsu;
  Mask undamaged;
  NormalField normals;
  OptimalNormal n_hat;
  Mask surface_inliers;  ///< undamaged pixels kept by the normal filter
  QuadraticSurface surface;
  Mask residual;
  PotholeLabelMap labels;
  StageTimings timings;
  /// Offset actually used; larger than the configured one when the first
  /// transformation produced negative values.
  double delta_used = 0.0;
};

/// Transformation through labelling, given an estimated road model.
/// Stage failures surface as Error with stage() set.
DetectionResult detect_potholes(const DisparityMap& map, RoadEstimate road, const RunConfig& config);

/// estimate_road followed by detect_potholes.
DetectionResult run_pipeline(const DisparityMap& map, const RunConfig& config);

/// Run-report JSON: effective config, estimates, per-stage diagnostics and
/// per-pothole statistics. With include_runtime, thread count and stage
/// timings are added under "runtime"; everything else is reproducible.
std::string report_json(const DetectionResult& result, const RunConfig& config, const std::string& input = {},
                        bool include_runtime = false);

/// Report for a roll-only run.
std::string roll_report_json(const RollEstimate& roll, const RunConfig& config, const std::string& input = {});

}  // namespace rutfinder
