#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "rutfinder/grid.hpp"

namespace rutfinder {

enum class DisparityFormat { Pfm, Png16 };

/// Fixed-point decoding for 16-bit PNG disparities. The defaults follow the
/// KITTI convention: disparity = value / 256, value 0 means no estimate.
struct Png16Options {
  double scale = 1.0 / 256.0;
  std::uint16_t invalid_value = 0;
};

/// Reads a disparity map. NaN/inf (PFM), the sentinel (PNG) and
/// non-positive disparities become invalid pixels.
///
/// Throws Error{Io} for unreadable files, Error{Format} for malformed
/// headers or truncated data and Error{EmptyMap} when no pixel is valid.
DisparityMap load_disparity(const std::filesystem::path& path, DisparityFormat format,
                            const Png16Options& png = {});

/// Format picked from the extension: .pfm or .png.
DisparityMap load_disparity(const std::filesystem::path& path, const Png16Options& png = {});

/// Little-endian grayscale PFM; invalid pixels are written as NaN.
void save_pfm(const std::filesystem::path& path, const DisparityMap& map);
void save_pfm(const std::filesystem::path& path, const Grid<double>& values, const Mask* valid = nullptr);

/// Three-channel ("PF") PFM, used for normal-field dumps.
void save_pfm_rgb(const std::filesystem::path& path, const Grid<std::array<float, 3>>& values);

/// Raw PFM contents, top row first, NaN preserved.
Grid<float> read_pfm(const std::filesystem::path& path);

/// Values are rounded onto the fixed-point grid; invalid pixels get the sentinel.
void save_png16(const std::filesystem::path& path, const DisparityMap& map, const Png16Options& png = {});

/// 8-bit grayscale mask, 0 background and 255 foreground.
void save_mask_png(const std::filesystem::path& path, const Mask& mask);
/// Any nonzero sample is foreground.
Mask load_mask_png(const std::filesystem::path& path);

void save_gray8_png(const std::filesystem::path& path, const Grid<std::uint8_t>& image);

/// Paletted 8-bit label image; index 0 is black background. Labels above 255 saturate.
void save_label_png(const std::filesystem::path& path, const Grid<int>& labels);
/// Palette indices of a label image written by save_label_png.
Grid<int> load_label_png(const std::filesystem::path& path);

}  // namespace rutfinder
