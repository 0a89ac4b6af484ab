#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>

namespace rutfinder {

/// Every tunable of the detector. Serialises to a flat JSON object whose
/// keys are the member names; unknown keys are rejected on load.
struct RunConfig {
  // roll angle
  double eps_theta = std::numbers::pi / 18000.0;
  int prescan_count = 16;
  int roll_stride = 0;
  /// Extra roll passes, each restricted to pixels close to the previous road model.
  int roll_refine = 2;
  // road projection model
  double d_bin_width = 1.0;
  double lambda = 16.0;
  int tau_max = 10;
  int ransac_iterations = 50;
  int sample_size = 3;
  double eps_alpha = 4.0;
  int halvings = 4;
  // transformation and segmentation
  double delta = 30.0;
  int otsu_bins = 256;
  // normals and surface
  int neighbors = 8;
  double eps_n = std::numbers::pi / 36.0;
  int block_size = 125;
  double eps_c0 = 4.0;
  bool refine = true;
  // detection
  double eps_d = 6.2;
  int min_pixels = 3100;
  // geometry
  double focal_length = 700.0;
  double baseline = 0.12;
  // run
  std::uint64_t seed = 42;
  int threads = 0;

  /// Throws Error{InvalidArgument} naming the first bad field.
  void validate() const;
  std::string to_json() const;
  /// Fields missing from the text keep their current value.
  void merge_json(const std::string& text);
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace rutfinder
