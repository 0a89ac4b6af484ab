#include "rutfinder/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace rutfinder {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::EmptyMap: return "empty-map";
    case ErrorKind::Degenerate: return "degenerate";
  }
  return "unknown";
}

NegativeTransformError::NegativeTransformError(std::size_t count, double minimum)
    : Error(ErrorKind::Degenerate,
            std::to_string(count) + " transformed disparities are negative (minimum " +
                std::to_string(minimum) + "); retry with a larger offset"),
      count_(count),
      minimum_(minimum) {}

std::size_t count_set(const Mask& mask) noexcept {
  std::size_t n = 0;
  for (auto v : mask.data()) n += v != 0;
  return n;
}

CenteredCoords to_centered(int col, int row, int width, int height) {
  if (col < 0 || row < 0 || col >= width || row >= height) {
    throw Error(ErrorKind::InvalidArgument,
                "pixel (" + std::to_string(col) + "," + std::to_string(row) + ") outside " +
                    std::to_string(width) + "x" + std::to_string(height) + " map");
  }
  return {col - 0.5 * (width - 1), row - 0.5 * (height - 1)};
}

std::pair<int, int> to_raster(CenteredCoords c, int width, int height) {
  return {static_cast<int>(std::lround(c.u + 0.5 * (width - 1))),
          static_cast<int>(std::lround(c.v + 0.5 * (height - 1)))};
}

Rotation::Rotation(double theta) noexcept : cs(std::cos(theta)), sn(std::sin(theta)) {}

RotatedCoords rotate_coords(CenteredCoords c, double theta) noexcept {
  const Rotation rot(theta);
  return {rot.x(c.u, c.v), rot.y(c.u, c.v)};
}

double wrap_half_turn(double theta) noexcept {
  constexpr double pi = std::numbers::pi;
  theta = std::remainder(theta, pi);  // [-pi/2, pi/2]
  if (theta <= -pi / 2) theta += pi;
  return theta;
}

DisparityMap::DisparityMap(Grid<double> disparity, Mask valid)
    : disparity_(std::move(disparity)), valid_(std::move(valid)) {
  if (!disparity_.same_shape(valid_)) {
    throw Error(ErrorKind::InvalidArgument, "disparity and validity mask differ in shape");
  }
  if (width() < kMinSide || height() < kMinSide) {
    throw Error(ErrorKind::InvalidArgument, "disparity map must be at least 3x3");
  }
  for (std::size_t i = 0; i < disparity_.size(); ++i) {
    if (!valid_[i]) continue;
    const double d = disparity_[i];
    if (!std::isfinite(d) || d <= 0.0) {
      throw Error(ErrorKind::InvalidArgument, "valid disparity must be finite and positive");
    }
    valid_[i] = 1;
    ++valid_count_;
  }
}

DisparityMap DisparityMap::from_values(int width, int height, std::vector<double> values) {
  Grid<double> grid(width, height, std::move(values));
  Mask valid(width, height, 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    valid[i] = std::isfinite(grid[i]) && grid[i] > 0.0;
  }
  return DisparityMap(std::move(grid), std::move(valid));
}

}  // namespace rutfinder
