#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "rutfinder/rollangle.hpp"

using namespace rutfinder;

namespace {

// Residual sum of squares of the best parabola d(y), fitted with
// column-pivoted QR in long double over the raw (unscaled) rows.
double oracle_energy(const DisparityMap& map, double theta, const Mask* roi = nullptr) {
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  std::vector<std::array<long double, 2>> pts;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (!map.valid(c, r) || (roi && !(*roi)(c, r))) continue;
      const long double u = c - 0.5L * (map.width() - 1);
      const long double v = r - 0.5L * (map.height() - 1);
      const long double y = v * std::cos(static_cast<long double>(theta)) - u * std::sin(static_cast<long double>(theta));
      pts.push_back({y, static_cast<long double>(map.at(c, r))});
    }
  }
  MatL a(pts.size(), 3);
  VecL b(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    a(i, 0) = 1;
    a(i, 1) = pts[i][0];
    a(i, 2) = pts[i][0] * pts[i][0];
    b(i) = pts[i][1];
  }
  const VecL x = a.colPivHouseholderQr().solve(b);
  return static_cast<double>((a * x - b).squaredNorm());
}

DisparityMap noisy_road(int w, int h, double theta, double sigma, std::uint64_t seed) {
  DisparityMap clean = testutil::road_map(w, h, 40.0, 0.15, 3e-5, theta);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Grid<double> g = clean.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += noise(rng);
  return DisparityMap(std::move(g), Mask(w, h, 1));
}

}  // namespace

TEST_SUITE("rollangle") {
  TEST_CASE("energy matches a long-double QR oracle") {
    const DisparityMap map = noisy_road(61, 43, 0.11, 0.2, 7);
    for (double t : {-1.3, -0.4, 0.0, 0.11, 0.5, 1.5}) {
      const double want = oracle_energy(map, t);
      CHECK(energy_at(map, t) == doctest::Approx(want).epsilon(1e-9));
    }
  }

  TEST_CASE("moment energy agrees with the direct fit") {
    const DisparityMap map = noisy_road(80, 50, -0.07, 0.1, 3);
    const RollEnergy e(map);
    CHECK(e.samples() == map.valid_count());
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> angle(-std::numbers::pi / 2, std::numbers::pi / 2);
    for (int i = 0; i < 40; ++i) {
      const double t = angle(rng);
      const double direct = energy_at(map, t);
      CHECK(e(t) == doctest::Approx(direct).epsilon(1e-9));
    }
  }

  TEST_CASE("energy vanishes at the true angle of a noise-free road") {
    const double theta = 0.123;
    const DisparityMap map = testutil::road_map(90, 60, 40.0, 0.15, 3e-5, theta);
    const RollEnergy e(map);
    CHECK(e(theta) < 1e-12 * map.valid_count());
    CHECK(e(theta + 0.01) > 1.0);
  }

  TEST_CASE("region of interest restricts the fit") {
    const DisparityMap map = noisy_road(50, 40, 0.05, 0.3, 11);
    std::mt19937_64 rng(2);
    const Mask roi = testutil::random_mask(rng, 50, 40, 0.4);
    RollOptions o;
    o.roi = &roi;
    CHECK(RollEnergy(map, o)(0.2) == doctest::Approx(oracle_energy(map, 0.2, &roi)).epsilon(1e-9));
    CHECK(RollEnergy(map, o).samples() == count_set(roi));
    const Mask wrong(10, 10, 1);
    o.roi = &wrong;
    CHECK_THROWS_AS(RollEnergy(map, o), Error);
  }

  TEST_CASE("golden-section search recovers the roll angle") {
    for (double theta : {-0.14, -0.02, 0.0, 0.09}) {
      const DisparityMap map = testutil::road_map(120, 80, 40.0, 0.15, 3e-5, theta);
      const RollEstimate est = estimate_roll(map);
      CHECK(std::abs(est.theta - theta) <= std::numbers::pi / 18000);
      // moment sums cancel near the minimum, so compare on the scale of a poor fit
      const double scale = energy_at(map, est.theta + 0.3);
      CHECK(std::abs(est.energy - energy_at(map, est.theta)) <= 1e-9 * scale);
    }
  }

  TEST_CASE("iteration bound from the full interval") {
    const double eps = std::numbers::pi / 18000;
    CHECK(max_gss_iterations(std::numbers::pi, eps) == 21);
    CHECK(std::pow(kGoldenRatio, 21) * std::numbers::pi <= eps);
    CHECK(std::pow(kGoldenRatio, 20) * std::numbers::pi > eps);

    const DisparityMap map = testutil::road_map(60, 40, 40.0, 0.15, 3e-5, 0.05);
    RollOptions o;
    o.prescan_count = 0;
    const RollEstimate est = estimate_roll(map, o);
    CHECK(est.initial_width == doctest::Approx(std::numbers::pi));
    CHECK(est.iterations == 21);
    REQUIRE(est.bracket_widths.size() == 21);
    CHECK(est.bracket_widths.back() <= eps);
    CHECK(est.bracket_widths[19] > eps);
    for (std::size_t i = 1; i < est.bracket_widths.size(); ++i) {
      CHECK(est.bracket_widths[i] == doctest::Approx(est.bracket_widths[i - 1] * kGoldenRatio).epsilon(1e-9));
    }
  }

  TEST_CASE("too few pixels is degenerate") {
    const DisparityMap map = testutil::road_map(10, 10, 40.0, 0.15, 0.0, 0.0);
    Mask roi(10, 10, 0);
    roi(3, 3) = roi(4, 4) = 1;
    RollOptions o;
    o.roi = &roi;
    try {
      estimate_roll(map, o);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Degenerate);
    }
    CHECK_THROWS_AS(estimate_roll(map, RollOptions{.eps_theta = 0.0}), Error);
  }

  TEST_CASE("column parabola fit") {
    std::vector<ColumnFitSample> s;
    for (int i = -5; i <= 5; ++i) s.push_back({static_cast<double>(i), 10.0 + 0.5 * i + 0.25 * i * i});
    const ColumnFit f = fit_energy(s);
    CHECK(f.alpha[0] == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(f.alpha[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f.alpha[2] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(f.energy < 1e-20);
    s.resize(2);
    CHECK_THROWS_AS(fit_energy(s), Error);
  }
}
