// Acceptance checks: one line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cli.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "rutfinder/config.hpp"
#include "rutfinder/detect.hpp"
#include "rutfinder/eval.hpp"
#include "rutfinder/io.hpp"
#include "rutfinder/pipeline.hpp"
#include "rutfinder/surface.hpp"
#include "rutfinder/synth.hpp"
#include "rutfinder/transform.hpp"

using namespace rutfinder;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Fail;
  std::string detail;
};

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

Outcome verdict(bool ok, const std::string& detail) { return {ok ? Status::Pass : Status::Fail, detail}; }

RunConfig frame_config(int width, int height, int threads = 1) {
  RunConfig cfg;
  cfg.min_pixels = static_cast<int>(scaled_min_pixels(width, height));
  cfg.threads = threads;
  return cfg;
}

BenchmarkOptions preset(Difficulty d) {
  BenchmarkOptions o;
  o.difficulty = d;
  return o;
}

// Transformed values over true road pixels.
std::vector<double> road_values(const DetectionResult& r, const Mask& road) {
  std::vector<double> v;
  for (std::size_t i = 0; i < road.size(); ++i) {
    if (road[i] && r.transformed.valid[i] && std::isfinite(r.transformed.values[i])) v.push_back(r.transformed.values[i]);
  }
  return v;
}

Outcome roll_accuracy() {
  BenchmarkOptions o = preset(Difficulty::Rolled);
  o.noise_sigma = 0.0;
  const RunConfig cfg = frame_config(o.width, o.height);
  double worst = 0.0, slowest = 0.0;
  for (int i = 0; i < 50; ++i) {
    const SceneSpec s = make_scene(o, i);
    const RenderedScene sc = render(s);
    const DetectionResult r = run_pipeline(sc.map, cfg);
    worst = std::max(worst, std::abs(r.road.roll.theta - s.theta));
    slowest = std::max(slowest, r.timings.roll);
  }
  const double bound = std::numbers::pi / 18000;
  return verdict(worst <= bound && slowest < 1000.0,
                 "max |dtheta| " + fmt(worst) + " rad (bound " + fmt(bound) + "), slowest roll stage " +
                     fmt(slowest, 3) + " ms");
}

Outcome gss_bound() {
  const SceneSpec s = make_scene(preset(Difficulty::Rolled), 0);
  RollOptions ro;
  ro.prescan_count = 0;
  const RollEstimate e = estimate_roll(render(s).map, ro);
  const double eps = ro.eps_theta;
  const auto& w = e.bracket_widths;
  const bool ok = e.iterations == 21 && w.size() == 21 && w.back() <= eps && w[19] > eps &&
                  e.initial_width == std::numbers::pi;
  return verdict(ok, std::to_string(e.iterations) + " iterations, final width " + fmt(w.empty() ? NAN : w.back()) +
                         ", width after 20 " + fmt(w.size() > 19 ? w[19] : NAN));
}

// Average sigma_d over the undamaged pixels of every disparity map in dir.
std::optional<double> kitti_average(const char* env) {
  const char* dir = std::getenv(env);
  if (!dir || !fs::is_directory(dir)) return std::nullopt;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (ext == ".pfm" || ext == ".png") files.push_back(e.path());
  }
  if (files.empty()) return std::nullopt;
  std::sort(files.begin(), files.end());
  double sum = 0.0;
  for (const auto& f : files) {
    const DisparityMap map = load_disparity(f);
    const DetectionResult r = run_pipeline(map, frame_config(map.width(), map.height(), 0));
    sum += sigma_d(road_values(r, r.undamaged));
  }
  return sum / files.size();
}

Outcome transform_uniformity() {
  const BenchmarkOptions o = preset(Difficulty::Noisy);
  const RunConfig cfg = frame_config(o.width, o.height);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const SceneSpec s = make_scene(o, i);
    const RenderedScene sc = render(s);
    worst = std::max(worst, sigma_d(road_values(run_pipeline(sc.map, cfg), sc.truth.road_mask)));
  }
  bool ok = worst <= 0.12;
  std::string detail = "max sigma_d " + fmt(worst) + " over 20 noisy frames";
  for (const auto& [env, want] : {std::pair{"RUTFINDER_KITTI2012_DIR", 0.4862}, {"RUTFINDER_KITTI2015_DIR", 0.5506}}) {
    if (const auto avg = kitti_average(env)) {
      const bool close = std::abs(*avg - want) <= 0.1 * want;
      ok = ok && close;
      detail += std::string("; ") + env + " average " + fmt(*avg) + (close ? " ok" : " outside +-10%");
    } else {
      detail += std::string("; ") + env + " not set, KITTI check skipped";
    }
  }
  return verdict(ok, detail);
}

Outcome otsu_exact() {
  std::mt19937_64 rng(17);
  int cases = 0, bad = 0;
  const auto t0 = Clock::now();
  while (cases < 100) {
    const int bins = 2 + static_cast<int>(rng() % 255);
    std::vector<std::int64_t> counts(bins);
    std::vector<double> sums(bins);
    for (int b = 0; b < bins; ++b) {
      counts[b] = rng() % 4 == 0 ? 0 : static_cast<std::int64_t>(rng() % 1000);
      sums[b] = static_cast<double>(counts[b] * b);
    }
    if (std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) < 2) continue;
    ++cases;
    const std::set<int> best = oracle::otsu_argmax(counts);
    const OtsuSplit s = otsu_threshold(counts, sums);
    const bool ok = best.count(s.first) && best.count(s.last) && (best.size() > 1 || s.boundary == *best.begin());
    bad += !ok;
  }
  const double ms = ms_since(t0);
  return verdict(bad == 0 && ms < 1000.0, std::to_string(cases - bad) + "/100 match, " + fmt(ms, 3) + " ms");
}

Outcome dp_exact() {
  std::mt19937_64 rng(5);
  const double lambdas[] = {0.0, 1.0, 4.0, 16.0};
  int cases = 0, bad = 0;
  const auto t0 = Clock::now();
  while (cases < 200) {
    const int nb = 1 + static_cast<int>(rng() % 8);
    const int rows = 1 + static_cast<int>(rng() % 8);
    const int tau = 1 + static_cast<int>(rng() % 3);
    const double lambda = lambdas[rng() % 4];
    const YDisparityMap h = oracle::random_ydisparity(rng, nb, rows);
    if (h.total() == 0) continue;
    ++cases;
    bad += extract_path(h, lambda, tau).energy != oracle::dp_min_energy(h, lambda, tau);
  }
  const double ms = ms_since(t0);
  return verdict(bad == 0 && ms < 5000.0, std::to_string(cases - bad) + "/200 match, " + fmt(ms, 3) + " ms");
}

Outcome optimal_normal_oracle() {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    NormalField f{Grid<Vec3>(40, 25), Mask(40, 25, 1), 8};
    const Eigen::Vector3d bias(g(rng), g(rng), g(rng));
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < f.present.size(); ++i) {
      const Eigen::Vector3d n = (bias + Eigen::Vector3d(g(rng), g(rng), g(rng))).normalized();
      f.normals[i] = {n.x(), n.y(), n.z()};
      sum += n;
    }
    const OptimalNormal o = optimal_normal(f);
    const Eigen::Vector3d got(o.n_hat[0], o.n_hat[1], o.n_hat[2]);
    const Eigen::Vector3d want = sum.normalized();
    worst = std::max(worst, std::atan2(got.cross(want).norm(), got.dot(want)));
  }
  return verdict(worst < 1e-9, "max angle " + fmt(worst, 3) + " rad over 50 fields of 1000 normals");
}

QuadraticSurface fit_through_filter(const DisparityMap& map, const RunConfig& cfg) {
  const NormalField f = estimate_normals(map, map.valid_mask(), cfg.neighbors, 1);
  const Mask keep = filter_by_normal(f, optimal_normal(f), cfg.eps_n);
  SurfaceFitOptions o;
  o.threads = 1;
  return fit_surface(map, keep, o);
}

Outcome surface_fidelity() {
  std::mt19937_64 rng(31);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const int w = 600, h = 400;
  const RunConfig cfg;
  double worst_coef = 0.0, worst_rms = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    QuadraticSurface truth;
    truth.c = {uni(40, 50), uni(-0.01, 0.01), uni(0.12, 0.17), uni(-2e-6, 2e-6), uni(0.0, 4e-5), uni(-2e-6, 2e-6)};
    Grid<double> clean = truth.render(w, h);
    const QuadraticSurface fit = fit_through_filter(DisparityMap(clean, Mask(w, h, 1)), cfg);
    for (int i = 0; i < 6; ++i) {
      worst_coef = std::max(worst_coef, std::abs(fit.c[i] - truth.c[i]) / std::max(1.0, std::abs(truth.c[i])));
    }

    // noise everywhere, steep ramps over 10% of the frame
    std::normal_distribution<double> noise(0.0, 0.1);
    Grid<double> g = clean;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += noise(rng);
    Mask corrupt(w, h, 0);
    while (count_set(corrupt) < g.size() / 10) {
      const int c0 = static_cast<int>(rng() % (w - 20)), r0 = static_cast<int>(rng() % (h - 20));
      for (int r = r0; r < r0 + 20; ++r) {
        for (int c = c0; c < c0 + 20; ++c) {
          if (corrupt(c, r)) continue;
          corrupt(c, r) = 1;
          g(c, r) += 1.5 * (c - c0);
        }
      }
    }
    const QuadraticSurface noisy = fit_through_filter(DisparityMap(g, Mask(w, h, 1)), cfg);
    double ss = 0.0;
    std::size_t n = 0;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (corrupt(c, r)) continue;
        const double e = g(c, r) - noisy.evaluate(to_centered(c, r, w, h));
        ss += e * e;
        ++n;
      }
    }
    worst_rms = std::max(worst_rms, std::sqrt(ss / n));
  }
  return verdict(worst_coef <= 1e-6 && worst_rms <= 0.15,
                 "max coefficient error " + fmt(worst_coef, 3) + ", max road residual RMS " + fmt(worst_rms));
}

struct Bench {
  std::vector<SceneSpec> specs;
  std::vector<RenderedScene> scenes;
  std::vector<DetectionResult> results;
};

Outcome detection(const Bench& b, const RunConfig& cfg) {
  const double min_area = 2.0 * cfg.min_pixels, min_depth = 2.0 * cfg.eps_d;
  int correct = 0, injected = 0;
  MetricsReport pooled;
  for (std::size_t i = 0; i < b.specs.size(); ++i) {
    for (std::size_t k = 0; k < b.specs[i].potholes.size(); ++k) {
      if (b.specs[i].potholes[k].depth < min_depth || count_set(b.scenes[i].truth.pothole_masks[k]) < min_area) {
        return {Status::Fail, "benchmark frame " + std::to_string(i) + " has a pothole below the size bounds"};
      }
      ++injected;
    }
    const DetectionResult& r = b.results[i];
    correct += r.labels.count() == static_cast<int>(b.specs[i].potholes.size());
    Mask pred(r.labels.labels.width(), r.labels.labels.height(), 0);
    for (std::size_t p = 0; p < pred.size(); ++p) pred[p] = r.labels.labels[p] > 0;
    pooled += pixel_metrics(pred, b.scenes[i].truth.pothole_mask, b.scenes[i].map.valid_mask());
  }
  pooled.finalize();

  BenchmarkOptions o = preset(Difficulty::Rolled);
  o.seed = 4242;
  o.min_potholes = o.max_potholes = 0;
  int clean = 0;
  for (int i = 0; i < 10; ++i) clean += run_pipeline(render(make_scene(o, i)).map, cfg).labels.count() == 0;

  const double f = pooled.f_score.value_or(0.0);
  return verdict(correct >= 29 && f >= 0.90 && clean == 10,
                 "counts correct on " + std::to_string(correct) + "/30 frames (" + std::to_string(injected) +
                     " potholes), pixel F " + fmt(f) + ", damage-free N=0 on " + std::to_string(clean) + "/10");
}

Outcome ccl_oracle() {
  std::mt19937_64 rng(64);
  int bad = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Mask m = oracle::ccl_mask(rng, 64, 64);
    const std::size_t w = 1 + rng() % 60;
    bad += !(clean_and_label(m, w).labels == oracle::clean_and_label(m, w));
  }
  return verdict(bad == 0, std::to_string(500 - bad) + "/500 masks match");
}

Outcome ply_round_trip(const Bench& b, const RunConfig& cfg) {
  testutil::TempDir dir("accept_ply");
  const StereoGeometry geom{cfg.focal_length, cfg.baseline};
  double worst = 0.0;
  std::size_t points = 0;
  for (std::size_t i = 0; i < b.results.size(); ++i) {
    const DisparityMap& map = b.scenes[i].map;
    const PotholeLabelMap& labels = b.results[i].labels;
    const fs::path file = dir / (std::to_string(i) + ".ply");
    save_ply(file, extract_pointcloud(map, geom, labels, true));
    const std::vector<CloudPoint> cloud = load_ply(file);
    // road pixels first, then each label, raster order within each
    std::size_t k = 0;
    for (int label = 0; label <= labels.count(); ++label) {
      for (int r = 0; r < map.height(); ++r) {
        for (int c = 0; c < map.width(); ++c) {
          if (!map.valid(c, r) || labels.labels(c, r) != label) continue;
          if (k >= cloud.size() || cloud[k].label != label) return {Status::Fail, "point order mismatch in frame " + std::to_string(i)};
          const double d = map.at(c, r);
          const double back = geom.focal_length * geom.baseline / cloud[k].z;
          const auto [u, v] = to_centered(c, r, map.width(), map.height());
          worst = std::max(worst, std::abs(back - d) / d);
          if (u != 0.0) worst = std::max(worst, std::abs(cloud[k].x * d / geom.baseline - u) / std::abs(u));
          if (v != 0.0) worst = std::max(worst, std::abs(cloud[k].y * d / geom.baseline - v) / std::abs(v));
          ++k;
        }
      }
    }
    if (k != cloud.size()) return {Status::Fail, "point count mismatch in frame " + std::to_string(i)};
    points += k;
  }
  return verdict(worst <= 1e-12, "max relative error " + fmt(worst, 3) + " over " + std::to_string(points) + " points");
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rutfinder");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

Outcome determinism(const Bench& b, const RunConfig& cfg) {
  testutil::TempDir dir("accept_det");
  write_benchmark(dir / "ds", b.specs, "rolled", 42);
  const std::string frames = (dir / "ds" / "frames").string();
  const std::string w = std::to_string(cfg.min_pixels);
  for (const char* t : {"1", "4"}) {
    if (cli({"detect", frames, "-o", (dir / (std::string("t") + t)).string(), "--threads", t, "--min-pixels", w,
             "--dump-debug"}) != 0) {
      return {Status::Fail, std::string("detect failed with ") + t + " thread(s)"};
    }
  }
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(dir / "t1")) {
    ++files;
    const fs::path other = dir / "t4" / e.path().filename();
    differ += !fs::exists(other) || testutil::slurp(e.path()) != testutil::slurp(other);
  }
  std::size_t other_files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "t4")) ++other_files;
  return verdict(differ == 0 && files == other_files && files > 0,
                 std::to_string(files - differ) + "/" + std::to_string(files) + " output files identical");
}

Outcome performance() {
  BenchmarkOptions o = preset(Difficulty::Rolled);
  o.width = 1720;
  o.height = 1028;
  const RenderedScene sc = render(make_scene(o, 0));
  const RunConfig cfg = frame_config(o.width, o.height);
  std::vector<double> total, transform;
  for (int run = 0; run < 3; ++run) {
    const auto t0 = Clock::now();
    const DetectionResult r = run_pipeline(sc.map, cfg);
    total.push_back(ms_since(t0));
    transform.push_back(r.timings.transform);
  }
  std::sort(total.begin(), total.end());
  std::sort(transform.begin(), transform.end());
  return verdict(total[1] <= 2000.0, "median detect " + fmt(total[1], 4) + " ms single-threaded; transformation " +
                                         fmt(transform[1], 3) + " ms (soft target 150 ms" +
                                         (transform[1] <= 150.0 ? ", met)" : ", missed)"));
}

Outcome dataset3() {
  const char* dir = std::getenv("RUTFINDER_DATASET3_DIR");
  if (!dir || !fs::is_directory(dir)) return {Status::Skip, "RUTFINDER_DATASET3_DIR not set"};
  const fs::path counts_file = fs::path(dir) / "counts.json";
  if (!fs::exists(counts_file)) return {Status::Fail, "counts.json missing from " + std::string(dir)};
  const auto counts = nlohmann::json::parse(testutil::slurp(counts_file));
  int correct = 0, frames = 0;
  for (const auto& [stem, want] : counts.items()) {
    fs::path frame = fs::path(dir) / (stem + ".pfm");
    if (!fs::exists(frame)) frame = fs::path(dir) / (stem + ".png");
    const DisparityMap map = load_disparity(frame);
    RunConfig cfg;
    cfg.threads = 0;
    correct += run_pipeline(map, cfg).labels.count() == want.get<int>();
    ++frames;
  }
  return verdict(frames == 5 && correct == 5, std::to_string(correct) + "/" + std::to_string(frames) + " correct");
}

}  // namespace

int main() {
  const BenchmarkOptions rolled = preset(Difficulty::Rolled);
  const RunConfig cfg = frame_config(rolled.width, rolled.height);
  Bench bench;
  auto load_bench = [&] {
    if (!bench.specs.empty()) return;
    for (int i = 0; i < 30; ++i) {
      bench.specs.push_back(make_scene(rolled, i));
      bench.scenes.push_back(render(bench.specs.back()));
      bench.results.push_back(run_pipeline(bench.scenes.back().map, cfg));
    }
  };

  const std::vector<std::function<Outcome()>> checks = {
      roll_accuracy,
      gss_bound,
      transform_uniformity,
      otsu_exact,
      dp_exact,
      optimal_normal_oracle,
      surface_fidelity,
      [&] { load_bench(); return detection(bench, cfg); },
      ccl_oracle,
      [&] { load_bench(); return ply_round_trip(bench, cfg); },
      [&] { load_bench(); return determinism(bench, cfg); },
      performance,
      dataset3,
  };

  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = checks[i]();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("threw: ") + e.what()};
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Skip ? "SKIP" : "FAIL";
    failures += o.status == Status::Fail;
    std::cout << "criterion " << i + 1 << ": " << tag << "  " << o.detail << "  [" << fmt(ms_since(t0) / 1000.0, 3)
              << " s]" << std::endl;
  }
  std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : std::string("all criteria met"))
            << std::endl;
  return failures ? 1 : 0;
}
