#include "rutfinder/detect.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rutfinder {

Mask residual_mask(const DisparityMap& map, const QuadraticSurface& surface, double eps_d) {
  if (!(eps_d > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps_d must be positive", "residual");
  Mask out(map.width(), map.height(), 0);
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (!map.valid(c, r)) continue;
      out(c, r) = surface.evaluate(map.centered(c, r)) - map.at(c, r) > eps_d;
    }
  }
  return out;
}

namespace {

// Raster indices of the background that component `id` encloses: pixels
// outside it that no 4-connected path through non-member pixels links to
// the border of its (padded) bounding box.
std::vector<std::size_t> holes_of(const ComponentAnalysis& a, int id) {
  const Component& comp = a.components[id];
  const BoundingBox& b = comp.bbox;
  const int bw = b.col1 - b.col0 + 1;
  const int bh = b.row1 - b.row0 + 1;
  std::vector<std::size_t> holes;
  if (bw < 3 || bh < 3 || comp.size < 4) return holes;

  const int pw = bw + 2;
  const int ph = bh + 2;
  // 0 = open, 1 = member, 2 = reached from outside
  std::vector<std::uint8_t> state(static_cast<std::size_t>(pw) * ph, 0);
  for (int r = 0; r < bh; ++r) {
    for (int c = 0; c < bw; ++c) {
      if (a.ids(b.col0 + c, b.row0 + r) == id) state[(r + 1) * pw + (c + 1)] = 1;
    }
  }
  std::vector<int> stack{0};
  state[0] = 2;
  while (!stack.empty()) {
    const int p = stack.back();
    stack.pop_back();
    const int pc = p % pw;
    const int pr = p / pw;
    const int nb[4][2] = {{pc - 1, pr}, {pc + 1, pr}, {pc, pr - 1}, {pc, pr + 1}};
    for (const auto& q : nb) {
      if (q[0] < 0 || q[1] < 0 || q[0] >= pw || q[1] >= ph) continue;
      const int qi = q[1] * pw + q[0];
      if (state[qi] != 0) continue;
      state[qi] = 2;
      stack.push_back(qi);
    }
  }
  for (int r = 0; r < bh; ++r) {
    for (int c = 0; c < bw; ++c) {
      if (state[(r + 1) * pw + (c + 1)] == 0) holes.push_back(a.ids.index(b.col0 + c, b.row0 + r));
    }
  }
  return holes;
}

}  // namespace

ComponentAnalysis analyze_components(const Mask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  ComponentAnalysis a{Grid<int>(w, h, -1), {}};
  std::vector<std::size_t> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask(c, r) || a.ids(c, r) >= 0) continue;
      const int id = static_cast<int>(a.components.size());
      Component comp;
      comp.first_pixel = a.ids.index(c, r);
      comp.bbox = {c, r, c, r};
      a.ids(c, r) = id;
      stack.assign(1, comp.first_pixel);
      while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        const int pc = static_cast<int>(p % w);
        const int pr = static_cast<int>(p / w);
        ++comp.size;
        comp.bbox.col0 = std::min(comp.bbox.col0, pc);
        comp.bbox.col1 = std::max(comp.bbox.col1, pc);
        comp.bbox.row0 = std::min(comp.bbox.row0, pr);
        comp.bbox.row1 = std::max(comp.bbox.row1, pr);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int qc = pc + dc;
            const int qr = pr + dr;
            if (!mask.contains(qc, qr) || !mask(qc, qr) || a.ids(qc, qr) >= 0) continue;
            a.ids(qc, qr) = id;
            stack.push_back(a.ids.index(qc, qr));
          }
        }
      }
      a.components.push_back(comp);
    }
  }
  for (int id = 0; id < static_cast<int>(a.components.size()); ++id) {
    const std::size_t size = a.components[id].size;
    for (std::size_t p : holes_of(a, id)) {
      const int other = a.ids[p];
      if (other >= 0 && other != id) {
        auto& enc = a.components[other].max_encloser_size;
        enc = std::max(enc, size);
      }
    }
  }
  return a;
}

std::size_t count_regions(const ComponentAnalysis& analysis, std::size_t min_pixels) {
  std::size_t n = 0;
  for (const auto& c : analysis.components) n += c.size >= min_pixels && c.max_encloser_size < min_pixels;
  return n;
}

PotholeLabelMap clean_and_label(const Mask& mask, std::size_t min_pixels) {
  return clean_and_label(analyze_components(mask), min_pixels);
}

PotholeLabelMap clean_and_label(const ComponentAnalysis& a, std::size_t min_pixels) {
  if (min_pixels < 1) throw Error(ErrorKind::InvalidArgument, "minimum region size must be at least 1", "label");
  const int w = a.ids.width();
  const int h = a.ids.height();
  PotholeLabelMap out{Grid<int>(w, h, 0), {}};
  for (int id = 0; id < static_cast<int>(a.components.size()); ++id) {
    const Component& comp = a.components[id];
    if (comp.size < min_pixels || comp.max_encloser_size >= min_pixels) continue;
    const int label = out.count() + 1;
    PotholeStats st;
    st.label = label;
    st.bbox = comp.bbox;
    const BoundingBox& b = comp.bbox;
    for (int r = b.row0; r <= b.row1; ++r) {
      for (int c = b.col0; c <= b.col1; ++c) {
        if (a.ids(c, r) == id) {
          out.labels(c, r) = label;
          ++st.pixels;
        }
      }
    }
    for (std::size_t p : holes_of(a, id)) {
      if (out.labels[p] == 0) {
        out.labels[p] = label;
        ++st.pixels;
      }
    }
    out.stats.push_back(st);
  }
  return out;
}

void measure_depths(PotholeLabelMap& labels, const DisparityMap& map, const QuadraticSurface& surface) {
  if (!labels.labels.same_shape(map.values())) {
    throw Error(ErrorKind::InvalidArgument, "label map differs in shape from the disparity map", "label");
  }
  std::vector<double> sum(labels.stats.size(), 0.0);
  std::vector<std::size_t> n(labels.stats.size(), 0);
  for (auto& s : labels.stats) s.max_depth = 0.0;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const int l = labels.labels(c, r);
      if (l <= 0 || !map.valid(c, r)) continue;
      const double depth = surface.evaluate(map.centered(c, r)) - map.at(c, r);
      sum[l - 1] += depth;
      ++n[l - 1];
      auto& s = labels.stats[l - 1];
      s.max_depth = n[l - 1] == 1 ? depth : std::max(s.max_depth, depth);
    }
  }
  for (std::size_t i = 0; i < labels.stats.size(); ++i) {
    labels.stats[i].mean_depth = n[i] ? sum[i] / static_cast<double>(n[i]) : 0.0;
  }
}

std::vector<CloudPoint> extract_pointcloud(const DisparityMap& map, const StereoGeometry& geom,
                                           const PotholeLabelMap& labels, bool include_road) {
  if (!(geom.focal_length > 0.0) || !(geom.baseline > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "focal length and baseline must be positive", "pointcloud");
  }
  if (!labels.labels.same_shape(map.values())) {
    throw Error(ErrorKind::InvalidArgument, "label map differs in shape from the disparity map", "pointcloud");
  }
  const int n = labels.count();
  // Bucket raster indices per label so output order is label-major.
  std::vector<std::vector<std::size_t>> buckets(n + 1);
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    const int l = labels.labels[i];
    if (!map.valid(i)) continue;
    if (l > 0 || include_road) buckets[std::clamp(l, 0, n)].push_back(i);
  }
  std::vector<CloudPoint> cloud;
  for (int l = 0; l <= n; ++l) {
    for (std::size_t i : buckets[l]) {
      const double d = map[i];
      if (!(d > 0.0)) throw Error(ErrorKind::Degenerate, "non-positive disparity in export set", "pointcloud");
      const CenteredCoords p = map.centered(static_cast<int>(i % map.width()), static_cast<int>(i / map.width()));
      cloud.push_back({p.u * geom.baseline / d, p.v * geom.baseline / d, geom.focal_length * geom.baseline / d, l});
    }
  }
  return cloud;
}

void save_ply(const std::filesystem::path& path, const std::vector<CloudPoint>& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing", "ply");
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nproperty int label\nend_header\n";
  char line[128];
  for (const auto& p : cloud) {
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g %d\n", p.x, p.y, p.z, p.label);
    out << line;
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string(), "ply");
}

std::vector<CloudPoint> load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string(), "ply");
  std::string line;
  std::size_t count = 0;
  bool header_ok = false;
  if (!std::getline(in, line) || line != "ply") throw Error(ErrorKind::Format, "missing ply magic", "ply");
  while (std::getline(in, line)) {
    if (line.rfind("element vertex ", 0) == 0) count = std::stoull(line.substr(15));
    if (line == "end_header") {
      header_ok = true;
      break;
    }
  }
  if (!header_ok) throw Error(ErrorKind::Format, "unterminated ply header", "ply");
  std::vector<CloudPoint> cloud(count);
  for (auto& p : cloud) {
    if (!(in >> p.x >> p.y >> p.z >> p.label)) throw Error(ErrorKind::Format, "truncated ply body", "ply");
  }
  return cloud;
}

}  // namespace rutfinder
