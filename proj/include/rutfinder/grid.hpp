#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rutfinder/error.hpp"

namespace rutfinder {

/// Dense row-major 2-D array addressed as (col, row).
template <class T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(checked_size(width, height), fill) {}

  Grid(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != checked_size(width, height)) {
      throw Error(ErrorKind::InvalidArgument, "grid data length does not match width x height");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int col, int row) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }
  bool contains(int col, int row) const noexcept {
    return col >= 0 && row >= 0 && col < width_ && row < height_;
  }

  T& operator()(int col, int row) noexcept { return data_[index(col, row)]; }
  const T& operator()(int col, int row) const noexcept { return data_[index(col, row)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& vector() const noexcept { return data_; }

  template <class U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid& a, const Grid& b) = default;

 private:
  static std::size_t checked_size(int width, int height) {
    if (width < 0 || height < 0) {
      throw Error(ErrorKind::InvalidArgument, "grid dimensions must be non-negative");
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Boolean per-pixel mask; nonzero means set.
using Mask = Grid<std::uint8_t>;

std::size_t count_set(const Mask& mask) noexcept;

/// Pixel position relative to the map centre; +u to the right, +v downward.
struct CenteredCoords {
  double u = 0.0;
  double v = 0.0;
};

/// Centered coordinates rotated by the roll angle.
struct RotatedCoords {
  double x = 0.0;
  double y = 0.0;
};

/// u = col - (width-1)/2, v = row - (height-1)/2. Throws on out-of-range indices.
CenteredCoords to_centered(int col, int row, int width, int height);

/// Raster indices for centered coordinates; the inverse of to_centered.
std::pair<int, int> to_raster(CenteredCoords c, int width, int height);

/// x = u cos(theta) + v sin(theta), y = v cos(theta) - u sin(theta).
RotatedCoords rotate_coords(CenteredCoords c, double theta) noexcept;

/// rotate_coords with the trigonometry hoisted out of pixel loops.
struct Rotation {
  double cs = 1.0;
  double sn = 0.0;
  explicit Rotation(double theta) noexcept;
  double x(double u, double v) const noexcept { return u * cs + v * sn; }
  double y(double u, double v) const noexcept { return v * cs - u * sn; }
};

/// Wraps an angle into (-pi/2, pi/2]. Roll angles are only defined modulo pi.
double wrap_half_turn(double theta) noexcept;

/// Dense subpixel disparity map with an explicit validity mask.
///
/// Invariants, checked at construction: width and height are at least 3 and
/// every valid disparity is finite and strictly positive. Values stored
/// under invalid pixels are meaningless and never read by the pipeline.
class DisparityMap {
 public:
  static constexpr int kMinSide = 3;

  DisparityMap(Grid<double> disparity, Mask valid);

  /// Builds a map from raw values; NaN, infinite and non-positive entries
  /// become invalid.
  static DisparityMap from_values(int width, int height, std::vector<double> values);

  int width() const noexcept { return disparity_.width(); }
  int height() const noexcept { return disparity_.height(); }
  std::size_t size() const noexcept { return disparity_.size(); }

  double at(int col, int row) const noexcept { return disparity_(col, row); }
  double operator[](std::size_t i) const noexcept { return disparity_[i]; }
  bool valid(int col, int row) const noexcept { return valid_(col, row) != 0; }
  bool valid(std::size_t i) const noexcept { return valid_[i] != 0; }

  const Grid<double>& values() const noexcept { return disparity_; }
  const Mask& valid_mask() const noexcept { return valid_; }
  std::size_t valid_count() const noexcept { return valid_count_; }

  CenteredCoords centered(int col, int row) const { return to_centered(col, row, width(), height()); }

 private:
  Grid<double> disparity_;
  Mask valid_;
  std::size_t valid_count_ = 0;
};

}  // namespace rutfinder
