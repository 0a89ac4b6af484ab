#pragma once

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "rutfinder/grid.hpp"

namespace rutfinder {

/// One (rotated row, disparity) observation for the column-wise road fit.
struct ColumnFitSample {
  double y = 0.0;
  double d = 0.0;
};

struct ColumnFit {
  std::array<double, 3> alpha{};  ///< d ≈ alpha0 + alpha1 y + alpha2 y²
  double energy = 0.0;            ///< residual sum of squares at alpha
};

/// Least-squares parabola through the samples. Throws Error{Degenerate}
/// with fewer than three distinct y values.
ColumnFit fit_energy(std::span<const ColumnFitSample> samples);

struct RollOptions {
  double eps_theta = std::numbers::pi / 18000.0;
  /// Coarse probes that pick the golden-section bracket; 0 searches the
  /// whole (-pi/2, pi/2] interval.
  int prescan_count = 16;
  /// Pixel subsampling step per axis; 0 means every pixel.
  int stride = 0;
  /// Optional region of interest; pixels outside it are ignored.
  const Mask* roi = nullptr;
};

/// Residual energy of the best parabola d(y) after rotating the centered
/// pixel coordinates by theta.
double energy_at(const DisparityMap& map, double theta, const RollOptions& options = {});

/// Roll energy for many angles from one pass over the map. The rotated
/// row y is linear in (u, v), so every sum the parabola fit needs is a
/// polynomial in cos/sin of the angle over fixed image moments; each
/// evaluation is O(1). Agrees with energy_at up to rounding.
class RollEnergy {
 public:
  explicit RollEnergy(const DisparityMap& map, const RollOptions& options = {});
  /// Throws Error{Degenerate} when the rotated rows leave the fit rank deficient.
  double operator()(double theta) const;
  std::size_t samples() const noexcept { return count_; }

 private:
  long double p_[5][5] = {};  // sum u^a v^b, a + b <= 4
  long double q_[3][3] = {};  // sum u^a v^b d', a + b <= 2
  long double dd_ = 0.0L;     // sum d'^2
  double scale_ = 1.0;
  std::size_t count_ = 0;
};

struct RollEstimate {
  double theta = 0.0;   ///< in (-pi/2, pi/2]
  double energy = 0.0;  ///< energy_at(theta)
  int iterations = 0;   ///< golden-section shrink steps
  double initial_width = 0.0;
  std::vector<double> bracket_widths;  ///< width after each shrink step
};

/// Golden-section search for the roll angle minimising energy_at.
RollEstimate estimate_roll(const DisparityMap& map, const RollOptions& options = {});

/// Upper bound on shrink steps for a bracket of the given width.
int max_gss_iterations(double initial_width, double eps_theta) noexcept;

inline constexpr double kGoldenRatio = 0.6180339887498948482;  // (sqrt(5) - 1) / 2

}  // namespace rutfinder
