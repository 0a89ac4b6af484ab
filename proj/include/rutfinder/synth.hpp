#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rutfinder/grid.hpp"

namespace rutfinder {

/// Elliptical bowl: depth (1 - q)² inside q = (du/a)² + (dv/b)² < 1.
struct PotholeSpec {
  double u = 0.0;  ///< centre, centered coordinates
  double v = 0.0;
  double a = 1.0;  ///< semi-axis along u
  double b = 1.0;  ///< semi-axis along v
  double depth = 1.0;

  /// Injected depth at a centered position (0 outside the ellipse).
  double depth_at(double u, double v) const noexcept;
};

struct SceneSpec {
  int width = 600;
  int height = 400;
  std::array<double, 3> alpha{};
  double theta = 0.0;
  std::vector<PotholeSpec> potholes;
  double noise_sigma = 0.0;
  double invalid_fraction = 0.0;
  /// Ground-truth pothole pixels are those injected at least this deep.
  double gt_min_depth = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_json() const;
  static SceneSpec from_json(const std::string& text);
};

struct GroundTruth {
  Mask pothole_mask;
  std::vector<Mask> pothole_masks;
  Mask road_mask;  ///< pixels outside every pothole ellipse
  double theta = 0.0;
  std::array<double, 3> alpha{};
};

struct RenderedScene {
  DisparityMap map;
  GroundTruth truth;
};

RenderedScene render(const SceneSpec& spec);

/// Ground truth without rendering disparities.
GroundTruth ground_truth(const SceneSpec& spec);

enum class Difficulty { Easy, Noisy, Rolled };
Difficulty parse_difficulty(const std::string& name);
const char* to_string(Difficulty d) noexcept;

struct BenchmarkOptions {
  int frames = 10;
  Difficulty difficulty = Difficulty::Rolled;
  std::uint64_t seed = 42;
  int width = 600;
  int height = 400;
  int min_potholes = 1;
  int max_potholes = 3;
  double gt_min_depth = 6.2;
  /// Noise sigma override; negative keeps the preset value.
  double noise_sigma = -1.0;
};

/// Random scene for frame `index` of a benchmark.
SceneSpec make_scene(const BenchmarkOptions& options, int index);

/// Per-frame seed derived from the master seed.
std::uint64_t frame_seed(std::uint64_t master, int index) noexcept;

/// Minimum region size scaled from a reference frame area of 1028 x 1720.
std::size_t scaled_min_pixels(int width, int height, std::size_t reference = 3100);

/// Renders the given scenes into dir: frames/NNNN.pfm, gt/NNNN_mask.png,
/// gt/NNNN_spec.json and manifest.json.
void write_benchmark(const std::filesystem::path& dir, std::span<const SceneSpec> specs, const std::string& preset,
                     std::uint64_t master_seed);

/// Writes frames/NNNN.pfm, gt/NNNN_mask.png, gt/NNNN_spec.json and
/// manifest.json under dir.
void make_benchmark(const std::filesystem::path& dir, const BenchmarkOptions& options);

}  // namespace rutfinder
