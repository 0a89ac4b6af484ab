#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "rutfinder/config.hpp"
#include "rutfinder/detect.hpp"
#include "rutfinder/eval.hpp"
#include "rutfinder/io.hpp"
#include "rutfinder/pipeline.hpp"
#include "rutfinder/rollangle.hpp"
#include "rutfinder/synth.hpp"
#include "rutfinder/transform.hpp"

namespace py = pybind11;
using namespace rutfinder;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

void require_2d(const py::array& a, const char* what) {
  if (a.ndim() != 2) throw py::value_error(std::string(what) + " must be a 2-D array");
}

// NaN, inf and non-positive values become invalid pixels.
DisparityMap to_map(const DoubleArray& a) {
  require_2d(a, "disparity");
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  std::vector<double> v(a.data(), a.data() + a.size());
  return DisparityMap::from_values(w, h, std::move(v));
}

Mask to_mask(const ByteArray& a) {
  require_2d(a, "mask");
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  return Mask(w, h, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

template <class T, class U = T>
py::array_t<U> to_array(const Grid<T>& g) {
  py::array_t<U> out({g.height(), g.width()});
  U* p = out.mutable_data();
  for (std::size_t i = 0; i < g.size(); ++i) p[i] = static_cast<U>(g[i]);
  return out;
}

py::array_t<bool> to_bool_array(const Mask& m) { return to_array<std::uint8_t, bool>(m); }

// Values under invalid pixels become NaN.
py::array_t<double> masked_array(const Grid<double>& g, const Mask& valid) {
  py::array_t<double> out = to_array(g);
  double* p = out.mutable_data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!valid[i]) p[i] = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

RunConfig config_from(const std::string& json_text) {
  return json_text.empty() ? RunConfig{} : RunConfig::from_json(json_text);
}

py::dict detect(const DoubleArray& disparity, const std::string& config_json) {
  const DisparityMap map = to_map(disparity);
  const RunConfig cfg = config_from(config_json);
  DetectionResult r;
  {
    py::gil_scoped_release release;
    r = run_pipeline(map, cfg);
  }
  py::dict d;
  d["report"] = report_json(r, cfg);
  d["labels"] = to_array<int, std::int32_t>(r.labels.labels);
  d["undamaged"] = to_bool_array(r.undamaged);
  d["transformed"] = masked_array(r.transformed.values, r.transformed.valid);
  d["residual"] = to_bool_array(r.residual);
  d["surface"] = r.surface.c;
  d["theta"] = r.road.roll.theta;
  d["alpha"] = r.road.model.alpha;
  d["count"] = r.labels.count();
  return d;
}

py::dict roll(const DoubleArray& disparity, double eps_theta, int prescan_count, std::optional<ByteArray> roi) {
  const DisparityMap map = to_map(disparity);
  std::optional<Mask> mask;
  if (roi) mask = to_mask(*roi);
  RollOptions o;
  o.eps_theta = eps_theta;
  o.prescan_count = prescan_count;
  o.roi = mask ? &*mask : nullptr;
  RollEstimate e;
  {
    py::gil_scoped_release release;
    e = estimate_roll(map, o);
  }
  py::dict d;
  d["theta"] = e.theta;
  d["energy"] = e.energy;
  d["iterations"] = e.iterations;
  d["initial_width"] = e.initial_width;
  d["bracket_widths"] = e.bracket_widths;
  return d;
}

py::tuple render_scene(const std::string& spec_json) {
  const RenderedScene s = render(SceneSpec::from_json(spec_json));
  return py::make_tuple(masked_array(s.map.values(), s.map.valid_mask()), to_bool_array(s.truth.pothole_mask),
                        to_bool_array(s.truth.road_mask));
}

py::dict metrics(const ByteArray& pred, const ByteArray& gt, std::optional<ByteArray> eval_mask) {
  const Mask p = to_mask(pred);
  const Mask g = to_mask(gt);
  const Mask e = eval_mask ? to_mask(*eval_mask) : Mask(p.width(), p.height(), 1);
  const MetricsReport m = pixel_metrics(p, g, e);
  py::dict d;
  d["tp"] = m.tp;
  d["fp"] = m.fp;
  d["fn"] = m.fn;
  d["tn"] = m.tn;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f_score"] = m.f_score;
  d["accuracy"] = m.accuracy;
  return d;
}

}  // namespace

PYBIND11_MODULE(_rutfinder, m) {
  m.doc() = "Pothole detection on dense disparity maps";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def("default_config", [] { return RunConfig{}.to_json(); }, "Default configuration as JSON text.");
  m.def("detect", &detect, py::arg("disparity"), py::arg("config_json") = std::string(),
        "Full pipeline on a 2-D disparity array (NaN or <= 0 marks invalid pixels).");
  m.def("estimate_roll", &roll, py::arg("disparity"), py::arg("eps_theta") = RollOptions{}.eps_theta,
        py::arg("prescan_count") = 16, py::arg("roi") = py::none());
  m.def("render_scene", &render_scene, py::arg("spec_json"),
        "Renders a scene spec; returns (disparity, pothole_mask, road_mask).");
  m.def("make_benchmark",
        [](const std::string& dir, int frames, const std::string& preset, std::uint64_t seed, int width, int height) {
          BenchmarkOptions o;
          o.frames = frames;
          o.difficulty = parse_difficulty(preset);
          o.seed = seed;
          o.width = width;
          o.height = height;
          make_benchmark(dir, o);
        },
        py::arg("directory"), py::arg("frames") = 10, py::arg("preset") = "rolled", py::arg("seed") = 42,
        py::arg("width") = 600, py::arg("height") = 400);
  m.def("make_scene",
        [](const std::string& preset, std::uint64_t seed, int index, int width, int height) {
          BenchmarkOptions o;
          o.difficulty = parse_difficulty(preset);
          o.seed = seed;
          o.width = width;
          o.height = height;
          return make_scene(o, index).to_json();
        },
        py::arg("preset") = "rolled", py::arg("seed") = 42, py::arg("index") = 0, py::arg("width") = 600,
        py::arg("height") = 400, "Random benchmark scene spec as JSON text.");
  m.def("load_disparity", [](const std::string& path) {
    const DisparityMap map = load_disparity(path);
    return masked_array(map.values(), map.valid_mask());
  });
  m.def("save_pfm", [](const std::string& path, const DoubleArray& a) { save_pfm(path, to_map(a)); });
  m.def("otsu_threshold",
        [](const std::vector<std::int64_t>& counts, const std::vector<double>& sums) {
          const OtsuSplit s = otsu_threshold(counts, sums);
          return py::make_tuple(s.boundary, s.variance);
        },
        py::arg("counts"), py::arg("sums"), "Best bin boundary and its inter-class variance.");
  m.def("sigma_d", [](const std::vector<double>& v) { return sigma_d(v); });
  m.def("pixel_metrics", &metrics, py::arg("pred"), py::arg("gt"), py::arg("eval_mask") = py::none());
  m.def("clean_and_label",
        [](const ByteArray& mask, std::size_t min_pixels) {
          return to_array<int, std::int32_t>(clean_and_label(to_mask(mask), min_pixels).labels);
        },
        py::arg("mask"), py::arg("min_pixels") = 3100);
  m.def("scaled_min_pixels", [](int w, int h) { return scaled_min_pixels(w, h); });
}
