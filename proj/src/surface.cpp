#include "rutfinder/surface.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "lsq.hpp"
#include "parallel.hpp"
#include "ransac.hpp"

namespace rutfinder {
namespace {

constexpr double kPi = std::numbers::pi;

struct Offset {
  int dc;
  int dr;
};

// The k grid offsets nearest the origin, origin excluded.
std::vector<Offset> neighbourhood(int k) {
  const int reach = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k)))) + 1;
  std::vector<Offset> all;
  for (int dr = -reach; dr <= reach; ++dr) {
    for (int dc = -reach; dc <= reach; ++dc) {
      if (dc != 0 || dr != 0) all.push_back({dc, dr});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](Offset a, Offset b) {
    const int da = a.dc * a.dc + a.dr * a.dr;
    const int db = b.dc * b.dc + b.dr * b.dr;
    if (da != db) return da < db;
    if (a.dr != b.dr) return a.dr < b.dr;
    return a.dc < b.dc;
  });
  all.resize(k);
  return all;
}

// Half-width h if the offsets plus the origin tile a full (2h+1)² square.
int square_half_width(const std::vector<Offset>& offs) {
  int h = 0;
  for (const auto& o : offs) h = std::max({h, std::abs(o.dc), std::abs(o.dr)});
  return static_cast<int>(offs.size()) + 1 == (2 * h + 1) * (2 * h + 1) ? h : -1;
}

Vec3 normalize(double x, double y, double z) {
  const double n = std::sqrt(x * x + y * y + z * z);
  return {x / n, y / n, z / n};
}

}  // namespace

NormalField estimate_normals(const DisparityMap& map, const Mask& mask, int k, int threads) {
  if (k < 3) throw Error(ErrorKind::InvalidArgument, "normal neighbourhood needs at least 3 points", "normals");
  if (!mask.same_shape(map.valid_mask())) {
    throw Error(ErrorKind::InvalidArgument, "mask differs in shape from the map", "normals");
  }
  const int w = map.width();
  const int h = map.height();
  NormalField field{Grid<Vec3>(w, h, Vec3{0.0, 0.0, 0.0}), Mask(w, h, 0), k};
  const auto offs = neighbourhood(k);
  const int half = square_half_width(offs);
  int reach = 0;
  for (const auto& o : offs) reach = std::max({reach, std::abs(o.dc), std::abs(o.dr)});

  // Square windows have zero mean offset and equal u/v second moments, so
  // the 3x3 scatter splits into a closed form.
  double s_uu = 0.0;
  for (const auto& o : offs) s_uu += o.dc * o.dc;
  const double npts = static_cast<double>(k + 1);

  auto usable = [&](int c, int r) { return mask(c, r) && map.valid(c, r); };

  auto row_job = [&](int, std::size_t r0, std::size_t r1) {
    for (int r = static_cast<int>(r0); r < static_cast<int>(r1); ++r) {
      if (r < reach || r >= h - reach) continue;
      for (int c = reach; c < w - reach; ++c) {
        if (!usable(c, r)) continue;
        bool full = true;
        for (const auto& o : offs) {
          if (!usable(c + o.dc, r + o.dr)) {
            full = false;
            break;
          }
        }
        if (!full) continue;
        const double d0 = map.at(c, r);
        Vec3 n;
        if (half > 0) {
          double sd = 0.0, sdd = 0.0, a = 0.0, b = 0.0;
          for (const auto& o : offs) {
            const double dd = map.at(c + o.dc, r + o.dr) - d0;
            sd += dd;
            sdd += dd * dd;
            a += o.dc * dd;
            b += o.dr * dd;
          }
          const double cdd = sdd - sd * sd / npts;
          const double r2 = a * a + b * b;
          const double diff = s_uu - cdd;
          const double root = std::sqrt(diff * diff + 4.0 * r2);
          // S - lambda_min, written to avoid cancellation on either sign of diff.
          const double gap = diff >= 0.0 ? 0.5 * (diff + root) : 2.0 * r2 / (root - diff);
          const double len2 = r2 + gap * gap;
          if (!(gap > 0.0) || !(len2 > 0.0)) continue;
          n = normalize(-a, -b, gap);
        } else {
          Eigen::Matrix<double, Eigen::Dynamic, 3> q(k + 1, 3);
          q.row(0) << 0.0, 0.0, 0.0;
          for (int i = 0; i < k; ++i) {
            q.row(i + 1) << offs[i].dc, offs[i].dr, map.at(c + offs[i].dc, r + offs[i].dr) - d0;
          }
          const Eigen::RowVector3d mean = q.colwise().mean();
          const Eigen::MatrixX3d centred = q.rowwise() - mean;
          Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(centred.transpose() * centred);
          Eigen::Vector3d v = es.eigenvectors().col(0);
          if (std::abs(v.z()) < 1e-12) continue;
          if (v.z() < 0) v = -v;
          n = normalize(v.x(), v.y(), v.z());
        }
        field.normals(c, r) = n;
        field.present(c, r) = 1;
      }
    }
  };
  detail::parallel_chunks(static_cast<std::size_t>(h), detail::resolve_threads(threads), row_job);
  return field;
}

OptimalNormal optimal_normal(const NormalField& field) {
  double su = 0.0, sv = 0.0, sd = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < field.present.size(); ++i) {
    if (!field.present[i]) continue;
    su += field.normals[i][0];
    sv += field.normals[i][1];
    sd += field.normals[i][2];
    ++count;
  }
  if (count == 0) throw Error(ErrorKind::Degenerate, "normal field is empty", "normals");
  const double mag = std::sqrt(su * su + sv * sv + sd * sd);
  if (!(mag > 1e-12 * static_cast<double>(count))) {
    throw Error(ErrorKind::Degenerate, "normals cancel out; no preferred direction", "normals");
  }

  const double base = (su == 0.0 && sv == 0.0) ? 0.0 : std::atan(sv / su);
  OptimalNormal best;
  best.energy = std::numeric_limits<double>::infinity();
  bool tie = false;
  for (int branch = 0; branch < 2; ++branch) {
    double phi2 = base + branch * kPi;
    if (phi2 < 0.0) phi2 += 2.0 * kPi;
    if (phi2 >= 2.0 * kPi) phi2 -= 2.0 * kPi;
    const double num = su * std::cos(phi2) + sv * std::sin(phi2);
    double phi1 = sd == 0.0 ? kPi / 2 : std::atan(num / sd);
    if (phi1 < 0.0) phi1 += kPi;
    const Vec3 n{std::sin(phi1) * std::cos(phi2), std::sin(phi1) * std::sin(phi2), std::cos(phi1)};
    const double e = -(su * n[0] + sv * n[1] + sd * n[2]);
    if (e < best.energy) {
      tie = false;
      best = {n, phi1, phi2, e};
    } else if (e == best.energy) {
      tie = true;
    }
  }
  if (tie) throw Error(ErrorKind::Degenerate, "both spherical branches give equal energy", "normals");
  return best;
}

Mask filter_by_normal(const NormalField& field, const OptimalNormal& n_hat, double eps_n) {
  if (!(eps_n > 0.0 && eps_n < kPi / 2)) {
    throw Error(ErrorKind::InvalidArgument, "eps_n must lie in (0, pi/2)", "normals");
  }
  Mask keep(field.present.width(), field.present.height(), 0);
  const auto& m = n_hat.n_hat;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!field.present[i]) continue;
    const auto& n = field.normals[i];
    const double dot = std::clamp(n[0] * m[0] + n[1] * m[1] + n[2] * m[2], -1.0, 1.0);
    keep[i] = std::acos(dot) <= eps_n + 1e-12;
  }
  return keep;
}

Grid<double> QuadraticSurface::render(int width, int height) const {
  Grid<double> g(width, height, 0.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) g(c, r) = evaluate(to_centered(c, r, width, height));
  }
  return g;
}

namespace {

// Masked pixels as structure-of-arrays with unit-range coordinates.
struct SurfaceSamples {
  std::vector<double> u, v, d;
  std::vector<int> block;
  double su = 1.0, sv = 1.0;
};

std::array<double, 6> terms(double u, double v) { return {1.0, u, v, u * u, v * v, u * v}; }

struct SurfaceSolve {
  std::array<double, 6> c{};  // in unit-range coordinates
  bool ok = false;
};

template <class Range>
SurfaceSolve solve_surface(const SurfaceSamples& s, const Range& idx) {
  detail::StreamingLeastSquares lsq(6);
  for (std::size_t i : idx) lsq.add_row(terms(s.u[i], s.v[i]), s.d[i]);
  SurfaceSolve out;
  if (lsq.rows() < 6) return out;
  const auto sol = lsq.solve(1e-10);
  if (!sol.full_rank()) return out;
  for (int j = 0; j < 6; ++j) out.c[j] = sol.x[j];
  out.ok = true;
  return out;
}

std::array<double, 6> to_pixel_units(const std::array<double, 6>& c, double su, double sv) {
  return {c[0], c[1] / su, c[2] / sv, c[3] / (su * su), c[4] / (sv * sv), c[5] / (su * sv)};
}

}  // namespace

QuadraticSurface fit_surface(const DisparityMap& map, const Mask& inlier_mask, const SurfaceFitOptions& opt) {
  if (opt.block_size < 1) throw Error(ErrorKind::InvalidArgument, "block size must be positive", "surface");
  if (opt.iterations < 1) throw Error(ErrorKind::InvalidArgument, "iteration count must be positive", "surface");
  if (opt.halvings < 1) throw Error(ErrorKind::InvalidArgument, "halvings must be at least 1", "surface");
  if (!(opt.eps_c0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps_c0 must be positive", "surface");
  if (!inlier_mask.same_shape(map.valid_mask())) {
    throw Error(ErrorKind::InvalidArgument, "mask differs in shape from the map", "surface");
  }

  const int w = map.width();
  const int h = map.height();
  const int bw = (w + opt.block_size - 1) / opt.block_size;
  const int bh = (h + opt.block_size - 1) / opt.block_size;

  SurfaceSamples s;
  s.su = std::max(1.0, 0.5 * (w - 1));
  s.sv = std::max(1.0, 0.5 * (h - 1));
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(bw) * bh);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!inlier_mask(c, r) || !map.valid(c, r)) continue;
      const CenteredCoords p = map.centered(c, r);
      const int b = (r / opt.block_size) * bw + c / opt.block_size;
      members[b].push_back(s.d.size());
      s.u.push_back(p.u / s.su);
      s.v.push_back(p.v / s.sv);
      s.d.push_back(map.at(c, r));
      s.block.push_back(b);
    }
  }
  std::vector<const std::vector<std::size_t>*> blocks;
  for (const auto& m : members) {
    if (!m.empty()) blocks.push_back(&m);
  }
  if (blocks.size() < 6) {
    throw Error(ErrorKind::Degenerate,
                "only " + std::to_string(blocks.size()) + " blocks hold masked pixels; at least 6 are needed",
                "surface");
  }

  std::vector<double> tol(opt.halvings);
  for (int j = 0; j < opt.halvings; ++j) tol[j] = opt.eps_c0 / std::ldexp(1.0, j);

  // Draw all candidate fits first so the random stream does not depend on
  // the thread count.
  std::mt19937_64 rng(opt.seed);
  std::vector<std::array<double, 6>> fits;
  std::vector<std::size_t> pick(blocks.size());
  const long max_attempts = 10L * opt.iterations;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(fits.size()) < opt.iterations; ++attempt) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      std::uniform_int_distribution<std::size_t> pickb(0, blocks[b]->size() - 1);
      pick[b] = (*blocks[b])[pickb(rng)];
    }
    const SurfaceSolve sol = solve_surface(s, pick);
    if (sol.ok) fits.push_back(sol.c);
  }
  if (fits.empty()) throw Error(ErrorKind::Degenerate, "every surface trial was rank deficient", "surface");

  const std::size_t n = s.d.size();
  const int nt = static_cast<int>(fits.size());
  const int levels = opt.halvings;
  std::vector<detail::RansacTrial> trials(nt);
  const int threads = detail::resolve_threads(opt.threads);
  detail::parallel_chunks(static_cast<std::size_t>(nt), threads, [&](int, std::size_t t0, std::size_t t1) {
    std::vector<std::size_t> in(levels);
    for (std::size_t t = t0; t < t1; ++t) {
      const auto& c = fits[t];
      std::fill(in.begin(), in.end(), 0);
      double rsum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double u = s.u[i];
        const double v = s.v[i];
        const double g = c[0] + u * (c[1] + c[3] * u + c[5] * v) + v * (c[2] + c[4] * v);
        const double res = std::abs(s.d[i] - g);
        for (int j = 0; j < levels; ++j) in[j] += res <= tol[j];
        if (res <= tol[levels - 1]) rsum += res;
      }
      auto& tr = trials[t];
      tr.params.assign(c.begin(), c.end());
      for (int j = 0; j < levels; ++j) tr.eta.push_back(detail::inlier_ratio(in[j], n - in[j]));
      tr.residual_sum = rsum;
    }
  });

  const auto choice = detail::select_trial(trials);
  std::array<double, 6> c = fits[choice.trial];

  auto inliers_of = [&](const std::array<double, 6>& cc) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = s.u[i];
      const double v = s.v[i];
      const double g = cc[0] + u * (cc[1] + cc[3] * u + cc[5] * v) + v * (cc[2] + cc[4] * v);
      if (std::abs(s.d[i] - g) <= tol.back()) in.push_back(i);
    }
    return in;
  };
  std::vector<std::size_t> in = inliers_of(c);
  if (opt.refine) {
    const SurfaceSolve refit = solve_surface(s, in);
    if (refit.ok) {
      auto refined_in = inliers_of(refit.c);
      if (refined_in.size() >= in.size()) {
        c = refit.c;
        in = std::move(refined_in);
      }
    }
  }

  QuadraticSurface out;
  out.c = to_pixel_units(c, s.su, s.sv);
  out.inlier_ratio = detail::inlier_ratio(in.size(), n - in.size());
  out.tolerance_final = tol.back();
  out.block_size = opt.block_size;
  out.accepted_column = choice.column;
  out.inliers = in.size();
  return out;
}

}  // namespace rutfinder
