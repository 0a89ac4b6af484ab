#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "parallel.hpp"
#include "rutfinder/config.hpp"
#include "rutfinder/detect.hpp"
#include "rutfinder/eval.hpp"
#include "rutfinder/io.hpp"
#include "rutfinder/pipeline.hpp"
#include "rutfinder/synth.hpp"

namespace rutfinder::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return kUsage;
    case ErrorKind::Io:
    case ErrorKind::Format: return kIo;
    case ErrorKind::EmptyMap:
    case ErrorKind::Degenerate: return kDegenerate;
  }
  return kInternal;
}

namespace {

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  int threads = 0;
  double eps_d = 0.0;
  int min_pixels = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* eps_d_opt = nullptr;
  CLI::Option* min_pixels_opt = nullptr;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON config file, or a run report whose config is reused");
  f.seed_opt = app->add_option("--seed", f.seed, "RANSAC seed");
  f.threads_opt = app->add_option("--threads", f.threads, "worker threads (0: RUTFINDER_THREADS or all cores)")
                      ->check(CLI::NonNegativeNumber);
  f.eps_d_opt = app->add_option("--eps-d", f.eps_d, "residual threshold for pothole pixels");
  f.min_pixels_opt = app->add_option("--min-pixels", f.min_pixels, "smallest pothole region in pixels");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

// defaults < config file < flags
RunConfig effective_config(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) {
    const std::string text = read_text(f.config);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Format, "config " + f.config + " is not valid JSON: " + e.what(), "config");
    }
    if (j.is_object() && j.contains("config") && j["config"].is_object()) {
      cfg.merge_json(j["config"].dump());
    } else {
      cfg.merge_json(text);
    }
  }
  if (f.seed_opt->count()) cfg.seed = f.seed;
  if (f.threads_opt->count()) cfg.threads = f.threads;
  if (f.eps_d_opt->count()) cfg.eps_d = f.eps_d;
  if (f.min_pixels_opt->count()) cfg.min_pixels = f.min_pixels;
  cfg.validate();
  return cfg;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

bool is_frame_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pfm" || ext == ".png";
}

// Files given directly plus the frames inside given directories, checked
// before anything is written.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p, ec)) {
        if (e.is_regular_file() && is_frame_file(e.path())) found.push_back(e.path());
      }
      if (ec) throw Error(ErrorKind::Io, "cannot list " + p.string() + ": " + ec.message());
      if (found.empty()) throw Error(ErrorKind::Io, "no .pfm or .png frames in " + p.string());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p, ec)) {
      files.push_back(p);
    } else {
      throw Error(ErrorKind::Io, "input not found: " + p.string());
    }
  }
  std::set<std::string> stems;
  for (const auto& f : files) {
    if (!stems.insert(f.stem().string()).second) {
      throw Error(ErrorKind::InvalidArgument, "two inputs share the name '" + f.stem().string() + "'");
    }
  }
  return files;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create directory " + dir.string());
}

RollOptions roll_options(const RunConfig& cfg, const Mask* roi) {
  RollOptions o;
  o.eps_theta = cfg.eps_theta;
  o.prescan_count = cfg.prescan_count;
  o.stride = cfg.roll_stride;
  o.roi = roi;
  return o;
}

struct FrameStatus {
  int code = kOk;
  std::string message;
};

// Runs fn over every frame, frame-parallel when several threads are
// available. Each frame then runs its stages single-threaded; results do
// not depend on the split.
template <class Fn>
std::vector<FrameStatus> for_each_frame(std::size_t n, int threads, Fn&& fn) {
  std::vector<FrameStatus> status(n);
  auto guarded = [&](std::size_t i, int inner_threads) {
    try {
      status[i].message = fn(i, inner_threads);
    } catch (const Error& e) {
      status[i] = {exit_code(e.kind()), std::string("error (") + to_string(e.kind()) + "): " + e.what()};
    } catch (const std::exception& e) {
      status[i] = {kInternal, std::string("error: ") + e.what()};
    }
  };
  if (n <= 1 || threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i, threads);
  } else {
    detail::parallel_chunks(n, threads, [&](int, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) guarded(i, 1);
    });
  }
  return status;
}

int report_status(const std::vector<fs::path>& names, const std::vector<FrameStatus>& status, std::ostream& out,
                  std::ostream& err) {
  int code = kOk;
  for (std::size_t i = 0; i < status.size(); ++i) {
    const std::string name = names[i].stem().string();
    if (status[i].code == kOk) {
      out << name << ": " << status[i].message << '\n';
    } else {
      err << name << ": " << status[i].message << '\n';
      code = std::max(code, status[i].code);
    }
  }
  return code;
}

// ---- detect ---------------------------------------------------------------

struct DetectArgs {
  CommonFlags common;
  std::vector<std::string> inputs;
  std::string output;
  bool roll_only = false;
  bool dump_debug = false;
  bool timings = false;
  double png_scale = 1.0 / 256.0;
};

Grid<std::uint8_t> ydisp_image(const YDisparityMap& ydisp) {
  const Grid<int>& c = ydisp.counts();
  int peak = 0;
  for (int v : c.data()) peak = std::max(peak, v);
  Grid<std::uint8_t> img(c.width(), c.height(), 0);
  if (peak == 0) return img;
  const double scale = 255.0 / std::log1p(static_cast<double>(peak));
  for (std::size_t i = 0; i < c.size(); ++i) {
    img[i] = static_cast<std::uint8_t>(std::lround(std::log1p(static_cast<double>(c[i])) * scale));
  }
  return img;
}

void write_debug(const fs::path& base, const DisparityMap& map, const DetectionResult& r) {
  const std::string b = base.string();
  if (r.road.ydisp) save_gray8_png(b + "_ydisp.png", ydisp_image(*r.road.ydisp));
  std::string csv = "d_bin,y_row,count,d,y\n";
  for (const auto& p : r.road.path.points) {
    csv += std::to_string(p.d_bin) + ',' + std::to_string(p.y_row) + ',' + std::to_string(p.count) + ',' + num(p.d) +
           ',' + num(p.y) + '\n';
  }
  write_text(b + "_path.csv", csv);
  save_pfm(b + "_surface.pfm", r.surface.render(map.width(), map.height()));
  const float nan = std::numeric_limits<float>::quiet_NaN();
  Grid<std::array<float, 3>> normals(map.width(), map.height(), {nan, nan, nan});
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (!r.normals.present[i]) continue;
    const Vec3& n = r.normals.normals[i];
    normals[i] = {static_cast<float>(n[0]), static_cast<float>(n[1]), static_cast<float>(n[2])};
  }
  save_pfm_rgb(b + "_normals.pfm", normals);
}

std::string detect_frame(const fs::path& input, const DetectArgs& a, RunConfig cfg, int threads) {
  cfg.threads = threads;
  Png16Options png;
  png.scale = a.png_scale;
  const DisparityMap map = load_disparity(input, png);
  const fs::path base = fs::path(a.output) / input.stem();
  const std::string b = base.string();

  if (a.roll_only) {
    const RollEstimate roll = estimate_roll(map, roll_options(cfg, nullptr));
    write_text(b + "_roll.json", roll_report_json(roll, cfg, input.string()) + '\n');
    return "theta " + num(roll.theta);
  }

  const DetectionResult r = run_pipeline(map, cfg);
  save_pfm(b + "_transformed.pfm", r.transformed.values, &r.transformed.valid);
  save_mask_png(b + "_undamaged.png", r.undamaged);
  save_label_png(b + "_labels.png", r.labels.labels);
  std::string csv = "label,pixels,col0,row0,col1,row1,mean_depth,max_depth\n";
  for (const auto& s : r.labels.stats) {
    csv += std::to_string(s.label) + ',' + std::to_string(s.pixels) + ',' + std::to_string(s.bbox.col0) + ',' +
           std::to_string(s.bbox.row0) + ',' + std::to_string(s.bbox.col1) + ',' + std::to_string(s.bbox.row1) + ',' +
           num(s.mean_depth) + ',' + num(s.max_depth) + '\n';
  }
  write_text(b + "_potholes.csv", csv);
  save_ply(b + "_potholes.ply", extract_pointcloud(map, {cfg.focal_length, cfg.baseline}, r.labels));
  write_text(b + "_report.json", report_json(r, cfg, input.string(), a.timings) + '\n');
  if (a.dump_debug) write_debug(base, map, r);
  return std::to_string(r.labels.count()) + " pothole(s)";
}

int cmd_detect(const DetectArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = effective_config(a.common);
  const std::vector<fs::path> files = expand_inputs(a.inputs);
  ensure_dir(a.output);
  const int threads = detail::resolve_threads(cfg.threads);
  const auto status = for_each_frame(files.size(), threads, [&](std::size_t i, int inner) {
    return detect_frame(files[i], a, cfg, inner);
  });
  return report_status(files, status, out, err);
}

// ---- roll -----------------------------------------------------------------

struct RollArgs {
  CommonFlags common;
  std::vector<std::string> inputs;
  std::string output;
  std::string roi;
  double png_scale = 1.0 / 256.0;
};

int cmd_roll(const RollArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = effective_config(a.common);
  const std::vector<fs::path> files = expand_inputs(a.inputs);
  std::optional<Mask> roi;
  if (!a.roi.empty()) roi = load_mask_png(a.roi);
  if (!a.output.empty()) ensure_dir(a.output);
  const int threads = detail::resolve_threads(cfg.threads);
  const auto status = for_each_frame(files.size(), threads, [&](std::size_t i, int) {
    Png16Options png;
    png.scale = a.png_scale;
    const DisparityMap map = load_disparity(files[i], png);
    if (roi && !roi->same_shape(map.valid_mask())) {
      throw Error(ErrorKind::InvalidArgument, "roi mask size differs from the frame");
    }
    const RollEstimate est = estimate_roll(map, roll_options(cfg, roi ? &*roi : nullptr));
    if (!a.output.empty()) {
      const fs::path path = fs::path(a.output) / (files[i].stem().string() + "_roll.json");
      write_text(path, roll_report_json(est, cfg, files[i].string()) + '\n');
    }
    return "theta " + num(est.theta) + " energy " + num(est.energy) + " iterations " +
           std::to_string(est.iterations);
  });
  return report_status(files, status, out, err);
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string output;
  std::string preset = "rolled";
  int frames = 10;
  std::uint64_t seed = 42;
  int width = 600;
  int height = 400;
  int min_potholes = 1;
  int max_potholes = 3;
  double gt_min_depth = 6.2;
  double noise = -1.0;
  std::vector<std::string> specs;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (!a.specs.empty()) {
    std::vector<SceneSpec> specs;
    for (const auto& s : a.specs) specs.push_back(SceneSpec::from_json(read_text(s)));
    write_benchmark(a.output, specs, "custom", a.seed);
    out << "wrote " << specs.size() << " frame(s) to " << a.output << '\n';
    return kOk;
  }
  BenchmarkOptions o;
  o.difficulty = parse_difficulty(a.preset);
  o.frames = a.frames;
  o.seed = a.seed;
  o.width = a.width;
  o.height = a.height;
  o.min_potholes = a.min_potholes;
  o.max_potholes = a.max_potholes;
  o.gt_min_depth = a.gt_min_depth;
  o.noise_sigma = a.noise;
  make_benchmark(a.output, o);
  out << "wrote " << o.frames << " " << a.preset << " frame(s) to " << a.output << '\n';
  return kOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string output;
};

// Names of files in dir ending with suffix, suffix removed.
std::set<std::string> names_with_suffix(const fs::path& dir, const std::string& suffix) {
  std::set<std::string> names;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    const std::string f = e.path().filename().string();
    if (f.size() > suffix.size() && f.compare(f.size() - suffix.size(), suffix.size(), suffix) == 0) {
      names.insert(f.substr(0, f.size() - suffix.size()));
    }
  }
  return names;
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& i : items) s += (s.empty() ? "" : ", ") + i;
  return s;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const fs::path gt_root(a.gt);
  std::error_code ec;
  const bool layout = fs::is_directory(gt_root / "gt", ec);
  const fs::path gt_dir = layout ? gt_root / "gt" : gt_root;
  const fs::path frame_dir = layout ? gt_root / "frames" : gt_root.parent_path() / "frames";

  const auto truth = names_with_suffix(gt_dir, "_mask.png");
  const auto pred = names_with_suffix(a.pred, "_labels.png");
  if (truth.empty()) throw Error(ErrorKind::Io, "no ground-truth masks in " + gt_dir.string());
  std::vector<std::string> no_pred, no_gt;
  std::set_difference(truth.begin(), truth.end(), pred.begin(), pred.end(), std::back_inserter(no_pred));
  std::set_difference(pred.begin(), pred.end(), truth.begin(), truth.end(), std::back_inserter(no_gt));
  if (!no_pred.empty() || !no_gt.empty()) {
    std::string msg = "frame lists differ";
    if (!no_pred.empty()) msg += "; no prediction for: " + join(no_pred);
    if (!no_gt.empty()) msg += "; no ground truth for: " + join(no_gt);
    throw Error(ErrorKind::Format, msg, "eval");
  }

  json frames = json::array();
  MetricsReport total;
  long delta_sum = 0;
  int correct = 0;
  double sigma_sum = 0.0;
  int sigma_frames = 0;
  for (const auto& name : truth) {
    const Mask gt = load_mask_png(gt_dir / (name + "_mask.png"));
    const Grid<int> labels = load_label_png(fs::path(a.pred) / (name + "_labels.png"));
    if (!labels.same_shape(gt)) throw Error(ErrorKind::Format, "prediction and ground truth sizes differ for " + name, "eval");
    Mask predicted(gt.width(), gt.height(), 0);
    std::set<int> ids;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] > 0) {
        predicted[i] = 1;
        ids.insert(labels[i]);
      }
    }
    Mask eval_mask(gt.width(), gt.height(), 1);
    const fs::path frame = frame_dir / (name + ".pfm");
    if (fs::exists(frame, ec)) {
      eval_mask = load_disparity(frame).valid_mask();
      if (!eval_mask.same_shape(gt)) throw Error(ErrorKind::Format, "frame and mask sizes differ for " + name, "eval");
    }
    MetricsReport m = pixel_metrics(predicted, gt, eval_mask);
    total += m;

    int detected = static_cast<int>(ids.size());
    const fs::path report = fs::path(a.pred) / (name + "_report.json");
    if (fs::exists(report, ec)) detected = json::parse(read_text(report)).value("pothole_count", detected);

    const fs::path spec_path = gt_dir / (name + "_spec.json");
    std::optional<SceneSpec> spec;
    if (fs::exists(spec_path, ec)) spec = SceneSpec::from_json(read_text(spec_path));
    int expected = 0;
    if (spec) {
      expected = static_cast<int>(spec->potholes.size());
    } else {
      expected = static_cast<int>(analyze_components(gt).components.size());
    }

    std::optional<double> sigma;
    const fs::path transformed = fs::path(a.pred) / (name + "_transformed.pfm");
    if (spec && fs::exists(transformed, ec)) {
      const Grid<float> t = read_pfm(transformed);
      const Mask road = ground_truth(*spec).road_mask;
      if (!t.same_shape(road)) throw Error(ErrorKind::Format, "transformed map size differs for " + name, "eval");
      std::vector<double> values;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (road[i] && std::isfinite(t[i])) values.push_back(t[i]);
      }
      if (values.size() >= 2) {
        sigma = sigma_d(values);
        sigma_sum += *sigma;
        ++sigma_frames;
      }
    }

    const int delta = std::abs(detected - expected);
    delta_sum += delta;
    correct += delta == 0;
    frames.push_back({{"name", name},
                      {"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn},
                      {"precision", optional_json(m.precision)},
                      {"recall", optional_json(m.recall)},
                      {"f_score", optional_json(m.f_score)},
                      {"accuracy", optional_json(m.accuracy)},
                      {"detected", detected},
                      {"expected", expected},
                      {"delta_n_pd", delta},
                      {"sigma_d", optional_json(sigma)}});
  }
  total.finalize();
  json j;
  j["frames"] = frames;
  j["total"] = {{"frames", truth.size()},
                {"tp", total.tp}, {"fp", total.fp}, {"fn", total.fn}, {"tn", total.tn},
                {"precision", optional_json(total.precision)},
                {"recall", optional_json(total.recall)},
                {"f_score", optional_json(total.f_score)},
                {"accuracy", optional_json(total.accuracy)},
                {"delta_n_pd", delta_sum},
                {"correct_count_frames", correct},
                {"detection_rate", static_cast<double>(correct) / truth.size()},
                {"mean_sigma_d", sigma_frames ? json(sigma_sum / sigma_frames) : json(nullptr)}};
  const std::string text = j.dump(2) + '\n';
  if (a.output.empty()) {
    out << text;
  } else {
    write_text(a.output, text);
    out << "wrote " << a.output << '\n';
  }
  return kOk;
}

// ---- sweep ----------------------------------------------------------------

struct SweepArgs {
  CommonFlags common;
  std::string dataset;
  std::string output;
  SweepRanges ranges;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = effective_config(a.common);
  const fs::path root(a.dataset);
  json manifest;
  try {
    manifest = json::parse(read_text(root / "manifest.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad manifest: ") + e.what(), "sweep");
  }
  std::vector<fs::path> files;
  std::vector<int> expected;
  try {
    for (const auto& f : manifest.at("frames")) {
      files.push_back(root / f.at("frame").get<std::string>());
      expected.push_back(f.at("potholes").get<int>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad manifest: ") + e.what(), "sweep");
  }
  if (files.empty()) throw Error(ErrorKind::InvalidArgument, "dataset has no frames", "sweep");
  for (const auto& f : files) {
    if (!fs::is_regular_file(f)) throw Error(ErrorKind::Io, "frame not found: " + f.string(), "sweep");
  }

  std::vector<SweepFrame> cache(files.size());
  const int threads = detail::resolve_threads(cfg.threads);
  const auto status = for_each_frame(files.size(), threads, [&](std::size_t i, int inner) {
    RunConfig c = cfg;
    c.threads = inner;
    const DisparityMap map = load_disparity(files[i]);
    const DetectionResult r = run_pipeline(map, c);
    cache[i] = SweepFrame::from(map, r.surface, expected[i]);
    return std::string("surface cached");
  });
  int code = kOk;
  for (std::size_t i = 0; i < status.size(); ++i) {
    if (status[i].code != kOk) {
      err << files[i].stem().string() << ": " << status[i].message << '\n';
      code = std::max(code, status[i].code);
    }
  }
  if (code != kOk) return code;

  const SweepResult res = param_sweep(cache, a.ranges, threads);
  if (!a.output.empty()) {
    std::string csv = "eps_d,w,delta_n_pd\n";
    for (int i = 0; i < a.ranges.eps_count; ++i) {
      for (int j = 0; j < a.ranges.w_count; ++j) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.1f,%zu,%ld\n", a.ranges.eps(i), a.ranges.w(j), res.total(j, i));
        csv += buf;
      }
    }
    write_text(a.output, csv);
  }
  out << "frames " << files.size() << ", grid " << a.ranges.eps_count << "x" << a.ranges.w_count << '\n';
  out << "min delta_n_pd " << res.best << " at " << res.argmin.size() << " cell(s)\n";
  if (!res.argmin.empty()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "argmin eps_d=%.1f w=%zu\n", res.argmin.front().eps_d, res.argmin.front().w);
    out << buf;
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pothole detection on dense disparity maps"};
  app.name("rutfinder");
  app.require_subcommand(1);

  DetectArgs detect;
  auto* d = app.add_subcommand("detect", "detect potholes in disparity frames");
  d->add_option("inputs", detect.inputs, "PFM/PNG frames or directories of frames")->required();
  d->add_option("-o,--output", detect.output, "output directory")->required();
  add_common(d, detect.common);
  d->add_flag("--roll-only", detect.roll_only, "estimate the roll angle only");
  d->add_flag("--dump-debug", detect.dump_debug, "also write y-disparity, path, surface and normals");
  d->add_flag("--timings", detect.timings, "add thread count and stage timings to the reports");
  d->add_option("--png-scale", detect.png_scale, "disparity per unit of 16-bit PNG input")->check(CLI::PositiveNumber);

  RollArgs roll;
  auto* r = app.add_subcommand("roll", "estimate the roll angle of disparity frames");
  r->add_option("inputs", roll.inputs, "PFM/PNG frames or directories of frames")->required();
  r->add_option("-o,--output", roll.output, "directory for per-frame roll reports");
  r->add_option("--roi", roll.roi, "PNG mask restricting the pixels used");
  add_common(r, roll.common);
  r->add_option("--png-scale", roll.png_scale, "disparity per unit of 16-bit PNG input")->check(CLI::PositiveNumber);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "write a synthetic benchmark with ground truth");
  s->add_option("-o,--output", synth.output, "dataset directory")->required();
  s->add_option("--preset", synth.preset, "easy, noisy or rolled");
  s->add_option("-n,--frames", synth.frames, "number of frames")->check(CLI::PositiveNumber);
  s->add_option("--seed", synth.seed, "master seed");
  s->add_option("--width", synth.width, "frame width");
  s->add_option("--height", synth.height, "frame height");
  s->add_option("--min-potholes", synth.min_potholes, "fewest potholes per frame");
  s->add_option("--max-potholes", synth.max_potholes, "most potholes per frame");
  s->add_option("--gt-min-depth", synth.gt_min_depth, "injected depth that counts as pothole in the masks");
  s->add_option("--noise", synth.noise, "noise sigma overriding the preset");
  s->add_option("--spec", synth.specs, "scene spec JSON files to render instead of a preset");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "score detections against ground truth");
  e->add_option("pred", eval.pred, "detect output directory")->required();
  e->add_option("gt", eval.gt, "benchmark directory or its gt/ directory")->required();
  e->add_option("-o,--output", eval.output, "metrics JSON file (default: stdout)");

  SweepArgs sweep;
  auto* w = app.add_subcommand("sweep", "brute-force search over eps_d and the minimum region size");
  w->add_option("dataset", sweep.dataset, "benchmark directory with manifest.json")->required();
  w->add_option("-o,--output", sweep.output, "CSV of eps_d, w and summed count error");
  add_common(w, sweep.common);
  w->add_option("--eps-first", sweep.ranges.eps_first_tenths, "first eps_d in tenths");
  w->add_option("--eps-count", sweep.ranges.eps_count, "number of eps_d values")->check(CLI::PositiveNumber);
  w->add_option("--w-first", sweep.ranges.w_first, "first region size")->check(CLI::PositiveNumber);
  w->add_option("--w-step", sweep.ranges.w_step, "region size step")->check(CLI::PositiveNumber);
  w->add_option("--w-count", sweep.ranges.w_count, "number of region sizes")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (d->parsed()) return cmd_detect(detect, out, err);
    if (r->parsed()) return cmd_roll(roll, out, err);
    if (s->parsed()) return cmd_synth(synth, out);
    if (e->parsed()) return cmd_eval(eval, out);
    if (w->parsed()) return cmd_sweep(sweep, out, err);
  } catch (const Error& ex) {
    err << "rutfinder: " << ex.what() << '\n';
    return exit_code(ex.kind());
  } catch (const std::exception& ex) {
    err << "rutfinder: " << ex.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

}  // namespace rutfinder::cli
