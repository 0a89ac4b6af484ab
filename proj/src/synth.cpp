#include "rutfinder/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <vector>
#include <random>

#include <json.hpp>

#include "rutfinder/io.hpp"

namespace rutfinder {

using nlohmann::json;

double PotholeSpec::depth_at(double pu, double pv) const noexcept {
  const double du = (pu - u) / a;
  const double dv = (pv - v) / b;
  const double q = du * du + dv * dv;
  if (q >= 1.0) return 0.0;
  const double s = 1.0 - q;
  return depth * s * s;
}

void SceneSpec::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::InvalidArgument, m, "synth"); };
  if (width < 3 || height < 3) bad("scene must be at least 3x3");
  for (double x : alpha) {
    if (!std::isfinite(x)) bad("alpha must be finite");
  }
  if (!std::isfinite(theta)) bad("theta must be finite");
  if (!(noise_sigma >= 0.0)) bad("noise sigma must be non-negative");
  if (!(invalid_fraction >= 0.0 && invalid_fraction < 1.0)) bad("invalid fraction must lie in [0, 1)");
  if (!(gt_min_depth >= 0.0)) bad("ground-truth depth threshold must be non-negative");
  const double hu = 0.5 * (width - 1);
  const double hv = 0.5 * (height - 1);
  for (const auto& p : potholes) {
    if (!(p.a >= 1.0 && p.b >= 1.0)) bad("pothole semi-axes must be at least 1");
    if (!(p.depth > 0.0)) bad("pothole depth must be positive");
    if (p.u - p.a < -hu || p.u + p.a > hu || p.v - p.b < -hv || p.v + p.b > hv) {
      bad("pothole extends outside the frame");
    }
  }
}

std::string SceneSpec::to_json() const {
  json j;
  j["width"] = width;
  j["height"] = height;
  j["alpha"] = alpha;
  j["theta"] = theta;
  j["noise_sigma"] = noise_sigma;
  j["invalid_fraction"] = invalid_fraction;
  j["gt_min_depth"] = gt_min_depth;
  j["seed"] = seed;
  j["potholes"] = json::array();
  for (const auto& p : potholes) {
    j["potholes"].push_back({{"u", p.u}, {"v", p.v}, {"a", p.a}, {"b", p.b}, {"depth", p.depth}});
  }
  return j.dump(2);
}

SceneSpec SceneSpec::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SceneSpec s;
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    s.alpha = j.at("alpha").get<std::array<double, 3>>();
    s.theta = j.at("theta").get<double>();
    s.noise_sigma = j.value("noise_sigma", 0.0);
    s.invalid_fraction = j.value("invalid_fraction", 0.0);
    s.gt_min_depth = j.value("gt_min_depth", 0.0);
    s.seed = j.value("seed", std::uint64_t{0});
    for (const auto& p : j.value("potholes", json::array())) {
      s.potholes.push_back({p.at("u").get<double>(), p.at("v").get<double>(), p.at("a").get<double>(),
                            p.at("b").get<double>(), p.at("depth").get<double>()});
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad scene spec: ") + e.what(), "synth");
  }
}

namespace {

double road_at(const SceneSpec& s, CenteredCoords p) {
  const double y = rotate_coords(p, s.theta).y;
  return s.alpha[0] + s.alpha[1] * y + s.alpha[2] * y * y;
}

}  // namespace

GroundTruth ground_truth(const SceneSpec& spec) {
  spec.validate();
  const int w = spec.width;
  const int h = spec.height;
  GroundTruth gt{Mask(w, h, 0), {}, Mask(w, h, 1), spec.theta, spec.alpha};
  for (const auto& p : spec.potholes) {
    Mask m(w, h, 0);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const CenteredCoords q = to_centered(c, r, w, h);
        const double depth = p.depth_at(q.u, q.v);
        if (depth > 0.0) gt.road_mask(c, r) = 0;
        if (depth > 0.0 && depth >= spec.gt_min_depth) {
          m(c, r) = 1;
          gt.pothole_mask(c, r) = 1;
        }
      }
    }
    gt.pothole_masks.push_back(std::move(m));
  }
  return gt;
}

RenderedScene render(const SceneSpec& spec) {
  GroundTruth gt = ground_truth(spec);
  const int w = spec.width;
  const int h = spec.height;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Grid<double> d(w, h, 0.0);
  Mask valid(w, h, 1);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const CenteredCoords q = to_centered(c, r, w, h);
      double value = road_at(spec, q);
      for (const auto& p : spec.potholes) value -= p.depth_at(q.u, q.v);
      if (spec.noise_sigma > 0.0) value += noise(rng);
      if (!(value > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "scene produces a non-positive disparity", "synth");
      }
      d(c, r) = value;
    }
  }
  if (spec.invalid_fraction > 0.0) {
    for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = unit(rng) >= spec.invalid_fraction;
  }
  return {DisparityMap(std::move(d), std::move(valid)), std::move(gt)};
}

Difficulty parse_difficulty(const std::string& name) {
  if (name == "easy") return Difficulty::Easy;
  if (name == "noisy") return Difficulty::Noisy;
  if (name == "rolled") return Difficulty::Rolled;
  throw Error(ErrorKind::InvalidArgument, "unknown preset '" + name + "' (expected easy, noisy or rolled)", "synth");
}

const char* to_string(Difficulty d) noexcept {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Noisy: return "noisy";
    case Difficulty::Rolled: return "rolled";
  }
  return "?";
}

std::uint64_t frame_seed(std::uint64_t master, int index) noexcept {
  // splitmix64 finaliser over the master seed and frame index
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::size_t scaled_min_pixels(int width, int height, std::size_t reference) {
  const double area = static_cast<double>(width) * height;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(reference * area / (1028.0 * 1720.0))));
}

SceneSpec make_scene(const BenchmarkOptions& o, int index) {
  if (o.width < 3 || o.height < 3) throw Error(ErrorKind::InvalidArgument, "frame must be at least 3x3", "synth");
  if (o.min_potholes < 0 || o.max_potholes < o.min_potholes) {
    throw Error(ErrorKind::InvalidArgument, "bad pothole count range", "synth");
  }
  const std::uint64_t seed = frame_seed(o.seed, index);
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  SceneSpec s;
  s.width = o.width;
  s.height = o.height;
  s.seed = seed ^ 0xD1B54A32D192ED03ull;
  s.gt_min_depth = o.gt_min_depth;
  const double half_h = 0.5 * o.height;
  const double d_top = uni(25.0, 30.0);
  const double a1 = uni(0.13, 0.17);
  const double a2 = uni(0.0, 5e-5) * (200.0 / half_h);
  s.alpha = {d_top + a1 * half_h - a2 * half_h * half_h, a1, a2};
  s.theta = o.difficulty == Difficulty::Rolled ? uni(-0.15, 0.15) : 0.0;
  s.noise_sigma = o.difficulty == Difficulty::Easy ? 0.0 : 0.1;
  if (o.noise_sigma >= 0.0) s.noise_sigma = o.noise_sigma;
  s.invalid_fraction = o.difficulty == Difficulty::Easy ? 0.0 : 0.01;

  const int wanted = std::uniform_int_distribution<int>(o.min_potholes, o.max_potholes)(rng);
  const double scale = std::min(o.width, o.height) / 400.0;
  const double hu = 0.5 * (o.width - 1);
  const double hv = 0.5 * (o.height - 1);
  constexpr double kGap = 4.0;
  for (int attempt = 0; attempt < 2000 && static_cast<int>(s.potholes.size()) < wanted; ++attempt) {
    PotholeSpec p;
    p.a = uni(40.0, 70.0) * scale;
    p.b = uni(25.0, 45.0) * scale;
    p.depth = uni(14.0, 22.0);
    if (p.a + kGap > hu || p.b + kGap > hv) continue;
    p.u = uni(-hu + p.a + kGap, hu - p.a - kGap);
    p.v = uni(-hv + p.b + kGap, hv - p.b - kGap);
    bool clear = true;
    for (const auto& q : s.potholes) {
      if (std::abs(p.u - q.u) < p.a + q.a + kGap && std::abs(p.v - q.v) < p.b + q.b + kGap) clear = false;
    }
    // Keep the bowl floor well above zero disparity.
    for (double t = 0.0; clear && t < 2.0 * std::numbers::pi; t += 0.05) {
      for (double rr : {0.0, 0.5, 1.0}) {
        const CenteredCoords at{p.u + rr * p.a * std::cos(t), p.v + rr * p.b * std::sin(t)};
        if (road_at(s, at) - p.depth_at(at.u, at.v) <= 2.0 + 4.0 * s.noise_sigma) clear = false;
      }
    }
    if (clear) s.potholes.push_back(p);
  }
  s.validate();
  return s;
}

namespace {

std::string frame_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing", "synth");
  out << text << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string(), "synth");
}

}  // namespace

void write_benchmark(const std::filesystem::path& dir, std::span<const SceneSpec> specs, const std::string& preset,
                     std::uint64_t master_seed) {
  if (specs.empty()) throw Error(ErrorKind::InvalidArgument, "benchmark needs at least one frame", "synth");
  for (const auto& spec : specs) spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir / "frames", ec);
  if (!ec) std::filesystem::create_directories(dir / "gt", ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message(), "synth");

  json manifest;
  manifest["preset"] = preset;
  manifest["master_seed"] = master_seed;
  manifest["width"] = specs.front().width;
  manifest["height"] = specs.front().height;
  manifest["gt_min_depth"] = specs.front().gt_min_depth;
  manifest["suggested_min_pixels"] = scaled_min_pixels(specs.front().width, specs.front().height);
  manifest["frames"] = json::array();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const SceneSpec& spec = specs[i];
    const RenderedScene scene = render(spec);
    const std::string name = frame_name(static_cast<int>(i));
    save_pfm(dir / "frames" / (name + ".pfm"), scene.map);
    save_mask_png(dir / "gt" / (name + "_mask.png"), scene.truth.pothole_mask);
    write_text(dir / "gt" / (name + "_spec.json"), spec.to_json());
    manifest["frames"].push_back({{"name", name},
                                  {"seed", spec.seed},
                                  {"potholes", spec.potholes.size()},
                                  {"theta", spec.theta},
                                  {"frame", "frames/" + name + ".pfm"},
                                  {"mask", "gt/" + name + "_mask.png"},
                                  {"spec", "gt/" + name + "_spec.json"}});
  }
  write_text(dir / "manifest.json", manifest.dump(2));
}

void make_benchmark(const std::filesystem::path& dir, const BenchmarkOptions& o) {
  if (o.frames < 1) throw Error(ErrorKind::InvalidArgument, "benchmark needs at least one frame", "synth");
  std::vector<SceneSpec> specs;
  for (int i = 0; i < o.frames; ++i) specs.push_back(make_scene(o, i));
  write_benchmark(dir, specs, to_string(o.difficulty), o.seed);
}

}  // namespace rutfinder
