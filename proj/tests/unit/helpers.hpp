#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "rutfinder/grid.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("rutfinder_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// d = a0 + a1 y + a2 y² with y the rotated row, every pixel valid.
inline rutfinder::DisparityMap road_map(int w, int h, double a0, double a1, double a2, double theta) {
  const rutfinder::Rotation rot(theta);
  rutfinder::Grid<double> g(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double y = rot.y(c - 0.5 * (w - 1), r - 0.5 * (h - 1));
      g(c, r) = a0 + a1 * y + a2 * y * y;
    }
  }
  return rutfinder::DisparityMap(std::move(g), rutfinder::Mask(w, h, 1));
}

inline rutfinder::Mask random_mask(std::mt19937_64& rng, int w, int h, double density) {
  std::bernoulli_distribution on(density);
  rutfinder::Mask m(w, h, 0);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = on(rng);
  return m;
}

}  // namespace testutil
