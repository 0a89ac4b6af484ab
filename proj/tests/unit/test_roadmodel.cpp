#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "rutfinder/roadmodel.hpp"

using namespace rutfinder;

TEST_SUITE("roadmodel") {
  TEST_CASE("y-disparity histogram counts every valid pixel once") {
    const DisparityMap map = testutil::road_map(40, 30, 30.0, 0.2, 1e-3, 0.1);
    const YDisparityMap h = build_ydisparity(map, 0.1);
    CHECK(h.total() == map.valid_count());
    long sum = 0;
    for (int v : h.counts().data()) sum += v;
    CHECK(sum == static_cast<long>(map.valid_count()));
    // every pixel lands in the bin of its rounded disparity and row
    const Rotation rot(0.1);
    const double y = rot.y(3 - 19.5, 7 - 14.5);
    CHECK(h.count(static_cast<int>(std::lround(map.at(3, 7))), static_cast<int>(std::lround(y))) >= 1);

    const YDisparityMap clipped = build_ydisparity(map, 0.1, 1.0, std::make_pair(28, 30));
    CHECK(clipped.d_bin_min() == 28);
    CHECK(clipped.d_bin_max() == 30);
    CHECK(clipped.total() < h.total());
  }

  TEST_CASE("path extraction equals exhaustive enumeration") {
    std::mt19937_64 rng(2024);
    const double lambdas[] = {0.0, 0.5, 1.0, 2.5, 16.0};
    for (int trial = 0; trial < 60; ++trial) {
      const int nb = 1 + static_cast<int>(rng() % 6);
      const int rows = 1 + static_cast<int>(rng() % 6);
      const int tau = 1 + static_cast<int>(rng() % 3);
      const double lambda = lambdas[rng() % 5];
      const YDisparityMap h = oracle::random_ydisparity(rng, nb, rows);
      if (h.total() == 0) {
        CHECK_THROWS_AS(extract_path(h, lambda, tau), Error);
        continue;
      }
      const TargetPath p = extract_path(h, lambda, tau);
      REQUIRE(static_cast<int>(p.points.size()) == nb);
      CHECK(p.energy == oracle::dp_min_energy(h, lambda, tau));
      CHECK(path_energy(h, p, lambda) == p.energy);
      for (std::size_t i = 1; i < p.points.size(); ++i) {
        CHECK(p.points[i].d_bin == p.points[i - 1].d_bin + 1);
        const int step = p.points[i].y_row - p.points[i - 1].y_row;
        CHECK(step >= 0);
        CHECK(step <= tau);
      }
    }
  }

  TEST_CASE("path follows a clean road profile") {
    const DisparityMap map = testutil::road_map(200, 150, 40.0, 0.15, 0.0, 0.0);
    const TargetPath p = extract_path(build_ydisparity(map, 0.0)).populated();
    REQUIRE(p.points.size() > 10);
    for (const auto& pt : p.points) {
      CHECK(std::abs(pt.d - (40.0 + 0.15 * pt.y)) < 0.5);
      CHECK(pt.count > 0);
    }
  }

  TEST_CASE("alpha RANSAC recovers an exact parabola and rejects outliers") {
    TargetPath path;
    for (int i = 0; i < 60; ++i) {
      const double y = -150.0 + 5.0 * i;
      const double d = 50.0 + 0.14 * y + 4e-5 * y * y;
      path.points.push_back({static_cast<int>(d), static_cast<int>(y), 10, d, y});
    }
    RoadProjectionModel m = estimate_alpha(path, 0.02);
    CHECK(m.alpha[0] == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(m.alpha[1] == doctest::Approx(0.14).epsilon(1e-9));
    CHECK(m.alpha[2] == doctest::Approx(4e-5).epsilon(1e-7));
    CHECK(m.theta == 0.02);
    CHECK(std::isinf(m.inlier_ratio));

    for (int i = 0; i < 60; i += 6) path.points[i].d += 25.0;
    m = estimate_alpha(path, 0.02);
    CHECK(m.alpha[0] == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(m.alpha[1] == doctest::Approx(0.14).epsilon(1e-9));
    CHECK(m.inliers == 50);
    CHECK(m.inlier_ratio == doctest::Approx(5.0));
    CHECK(m.evaluate(CenteredCoords{0.0, 0.0}) == doctest::Approx(50.0));
  }

  TEST_CASE("alpha RANSAC is reproducible per seed") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.5);
    TargetPath path;
    for (int i = 0; i < 40; ++i) {
      const double y = i * 3.0;
      path.points.push_back({0, i, 1, 30.0 + 0.2 * y + noise(rng), y});
    }
    const RoadProjectionModel a = estimate_alpha(path, 0.0);
    const RoadProjectionModel b = estimate_alpha(path, 0.0);
    CHECK(a.alpha == b.alpha);
    path.points.resize(2);
    CHECK_THROWS_AS(estimate_alpha(path, 0.0), Error);
  }
}
