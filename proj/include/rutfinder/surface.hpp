#pragma once

#include <array>
#include <cstdint>
#include <numbers>

#include "rutfinder/grid.hpp"

namespace rutfinder {

using Vec3 = std::array<double, 3>;

/// Unit normals (n_u, n_v, n_d) in disparity space, oriented n_d > 0.
struct NormalField {
  Grid<Vec3> normals;
  Mask present;  ///< pixels that carry a normal
  int k = 8;
  std::size_t count() const noexcept { return count_set(present); }
};

/// Plane fit over each masked pixel and its k nearest grid neighbours
/// (ordered by distance, then row, then column). A pixel gets a normal only
/// when it and all k neighbours are masked and valid.
NormalField estimate_normals(const DisparityMap& map, const Mask& mask, int k = 8, int threads = 0);

struct OptimalNormal {
  Vec3 n_hat{};
  double phi1 = 0.0;  ///< [0, pi]
  double phi2 = 0.0;  ///< [0, 2 pi)
  double energy = 0.0;  ///< -sum n_i . n_hat
};

/// Direction minimising -sum n_i . n through the two spherical stationary
/// points. Throws Error{Degenerate} when the normals cancel out.
OptimalNormal optimal_normal(const NormalField& field);

/// Pixels whose normal lies within eps_n of n_hat (closed bound).
Mask filter_by_normal(const NormalField& field, const OptimalNormal& n_hat,
                      double eps_n = std::numbers::pi / 36.0);

/// g(u, v) = c0 + c1 u + c2 v + c3 u² + c4 v² + c5 u v in centered coordinates.
struct QuadraticSurface {
  std::array<double, 6> c{};
  double inlier_ratio = 0.0;  ///< +inf when the accepted fit had no outliers
  double tolerance_final = 0.0;
  int block_size = 125;
  int accepted_column = 0;
  std::size_t inliers = 0;  ///< masked pixels within tolerance_final

  double evaluate(double u, double v) const noexcept {
    return c[0] + c[1] * u + c[2] * v + c[3] * u * u + c[4] * v * v + c[5] * u * v;
  }
  double evaluate(CenteredCoords p) const noexcept { return evaluate(p.u, p.v); }
  /// g at every pixel of a width x height grid.
  Grid<double> render(int width, int height) const;
};

struct SurfaceFitOptions {
  int block_size = 125;
  int iterations = 50;
  double eps_c0 = 4.0;
  int halvings = 4;
  std::uint64_t seed = 42;
  /// Least-squares refit over the final-tolerance inliers of the accepted trial.
  bool refine = true;
  int threads = 0;
};

/// Block-sampled RANSAC fit of g to the masked valid disparities.
QuadraticSurface fit_surface(const DisparityMap& map, const Mask& inlier_mask, const SurfaceFitOptions& options = {});

}  // namespace rutfinder
