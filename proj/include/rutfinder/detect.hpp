#pragma once

#include <filesystem>
#include <vector>

#include "rutfinder/grid.hpp"
#include "rutfinder/surface.hpp"

namespace rutfinder {

/// Valid pixels lying more than eps_d below the modelled surface
/// (g - d > eps_d). Bumps above the surface are never marked.
Mask residual_mask(const DisparityMap& map, const QuadraticSurface& surface, double eps_d = 6.2);

struct BoundingBox {
  int col0 = 0, row0 = 0;  ///< inclusive
  int col1 = 0, row1 = 0;  ///< inclusive
};

/// One 8-connected foreground component of a mask.
struct Component {
  std::size_t size = 0;
  BoundingBox bbox;
  std::size_t first_pixel = 0;  ///< raster index of its first pixel
  /// Size of the largest other component whose enclosed background
  /// contains this one; 0 when nothing encloses it.
  std::size_t max_encloser_size = 0;
};

/// Components in raster-first order; ids holds the component index per
/// pixel, or -1 for background.
struct ComponentAnalysis {
  Grid<int> ids;
  std::vector<Component> components;
};

ComponentAnalysis analyze_components(const Mask& mask);

/// Number of regions clean_and_label would keep for the given w.
std::size_t count_regions(const ComponentAnalysis& analysis, std::size_t min_pixels);

struct PotholeStats {
  int label = 0;
  std::size_t pixels = 0;
  BoundingBox bbox;
  double mean_depth = 0.0;  ///< mean g - d over the region's valid pixels
  double max_depth = 0.0;
};

/// Labels 1..N ordered by first raster pixel; 0 is background.
struct PotholeLabelMap {
  Grid<int> labels;
  std::vector<PotholeStats> stats;  ///< stats[i] describes label i + 1
  int count() const noexcept { return static_cast<int>(stats.size()); }
};

/// Drops 8-connected components smaller than min_pixels, fills the
/// background each survivor encloses (4-connected), and relabels. A
/// survivor lying inside another survivor's hole is absorbed by it.
PotholeLabelMap clean_and_label(const Mask& mask, std::size_t min_pixels = 3100);
PotholeLabelMap clean_and_label(const ComponentAnalysis& analysis, std::size_t min_pixels);

/// Fills mean/max depth of every region against the surface.
void measure_depths(PotholeLabelMap& labels, const DisparityMap& map, const QuadraticSurface& surface);

struct StereoGeometry {
  double focal_length = 700.0;  ///< pixels
  double baseline = 0.12;       ///< metres
};

struct CloudPoint {
  double x = 0.0, y = 0.0, z = 0.0;  ///< metres
  int label = 0;
};

/// Back-projects X = uT/d, Y = vT/d, Z = fT/d at centered (u, v) for every
/// valid labelled pixel, in label order then raster order. With
/// include_road, the unlabelled valid pixels come first with label 0.
std::vector<CloudPoint> extract_pointcloud(const DisparityMap& map, const StereoGeometry& geom,
                                           const PotholeLabelMap& labels, bool include_road = false);

void save_ply(const std::filesystem::path& path, const std::vector<CloudPoint>& cloud);
std::vector<CloudPoint> load_ply(const std::filesystem::path& path);

}  // namespace rutfinder
