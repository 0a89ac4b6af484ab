#include "rutfinder/rollangle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lsq.hpp"

namespace rutfinder {
namespace {

constexpr double kPi = std::numbers::pi;

// Pixels taking part in the roll fit, in centered coordinates.
struct RollSamples {
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> d;
  double scale = 1.0;  // rotated |y| never exceeds this; keeps the Vandermonde columns O(1)
};

int effective_stride(const RollOptions& opt) { return opt.stride > 0 ? opt.stride : 1; }

void check_roi(const DisparityMap& map, const RollOptions& opt) {
  if (opt.roi && !opt.roi->same_shape(map.valid_mask())) {
    throw Error(ErrorKind::InvalidArgument, "region of interest differs in shape from the map", "roll");
  }
}

double coordinate_scale(const DisparityMap& map) {
  return std::max(1.0, std::hypot(0.5 * (map.width() - 1), 0.5 * (map.height() - 1)));
}

RollSamples collect(const DisparityMap& map, const RollOptions& opt) {
  check_roi(map, opt);
  const int stride = effective_stride(opt);
  RollSamples s;
  for (int r = 0; r < map.height(); r += stride) {
    for (int c = 0; c < map.width(); c += stride) {
      if (!map.valid(c, r) || (opt.roi && !(*opt.roi)(c, r))) continue;
      const CenteredCoords p = map.centered(c, r);
      s.u.push_back(p.u);
      s.v.push_back(p.v);
      s.d.push_back(map.at(c, r));
    }
  }
  s.scale = coordinate_scale(map);
  return s;
}

double energy(const RollSamples& s, double theta) {
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double inv = 1.0 / s.scale;
  detail::StreamingLeastSquares lsq(3);
  double row[3] = {1.0, 0.0, 0.0};
  for (std::size_t i = 0; i < s.d.size(); ++i) {
    const double y = (s.v[i] * cs - s.u[i] * sn) * inv;
    row[1] = y;
    row[2] = y * y;
    lsq.add_row(row, s.d[i]);
  }
  const auto sol = lsq.solve();
  if (!sol.full_rank()) {
    throw Error(ErrorKind::Degenerate, "fewer than three distinct rotated rows for the roll fit");
  }
  return sol.residual_sq;
}

}  // namespace

ColumnFit fit_energy(std::span<const ColumnFitSample> samples) {
  std::vector<double> ys;
  ys.reserve(samples.size());
  double scale = 0.0;
  for (const auto& s : samples) {
    ys.push_back(s.y);
    scale = std::max(scale, std::abs(s.y));
  }
  std::sort(ys.begin(), ys.end());
  if (std::unique(ys.begin(), ys.end()) - ys.begin() < 3) {
    throw Error(ErrorKind::Degenerate, "column fit needs at least three distinct y values");
  }
  const double inv = 1.0 / scale;
  detail::StreamingLeastSquares lsq(3);
  for (const auto& s : samples) {
    const double y = s.y * inv;
    const double row[3] = {1.0, y, y * y};
    lsq.add_row(row, s.d);
  }
  const auto sol = lsq.solve(1e-13);
  if (!sol.full_rank()) throw Error(ErrorKind::Degenerate, "column fit is rank deficient");
  return {{sol.x[0], sol.x[1] * inv, sol.x[2] * inv * inv}, sol.residual_sq};
}

double energy_at(const DisparityMap& map, double theta, const RollOptions& options) {
  return energy(collect(map, options), theta);
}

RollEnergy::RollEnergy(const DisparityMap& map, const RollOptions& opt) : scale_(coordinate_scale(map)) {
  check_roi(map, opt);
  const int stride = effective_stride(opt);
  auto take = [&](int c, int r) { return map.valid(c, r) && (!opt.roi || (*opt.roi)(c, r)); };

  // Centre d first; the intercept absorbs the shift and the energy loses
  // less to cancellation.
  long double dsum = 0.0L;
  for (int r = 0; r < map.height(); r += stride) {
    double row = 0.0;
    for (int c = 0; c < map.width(); c += stride) {
      if (!take(c, r)) continue;
      row += map.at(c, r);
      ++count_;
    }
    dsum += row;
  }
  if (count_ == 0) return;
  const double dmean = static_cast<double>(dsum / count_);

  const double inv = 1.0 / scale_;
  const double u0 = 0.5 * (map.width() - 1);
  const double v0 = 0.5 * (map.height() - 1);
  for (int r = 0; r < map.height(); r += stride) {
    // Row partials in double, merged in extended precision.
    double pr[5][5] = {};
    double qr[3][3] = {};
    double ddr = 0.0;
    const double v = (r - v0) * inv;
    for (int c = 0; c < map.width(); c += stride) {
      if (!take(c, r)) continue;
      const double u = (c - u0) * inv;
      const double d = map.at(c, r) - dmean;
      double up = 1.0;
      for (int a = 0; a <= 4; ++a) {
        double vp = 1.0;
        for (int b = 0; a + b <= 4; ++b) {
          pr[a][b] += up * vp;
          if (a + b <= 2) qr[a][b] += up * vp * d;
          vp *= v;
        }
        up *= u;
      }
      ddr += d * d;
    }
    for (int a = 0; a <= 4; ++a) {
      for (int b = 0; a + b <= 4; ++b) {
        p_[a][b] += pr[a][b];
        if (a + b <= 2) q_[a][b] += qr[a][b];
      }
    }
    dd_ += ddr;
  }
}

double RollEnergy::operator()(double theta) const {
  if (count_ < 3) throw Error(ErrorKind::Degenerate, "roll estimation needs at least three pixels", "roll");
  // y = c v - s u; expand sum y^k and sum y^k d' binomially.
  const long double c = std::cos(theta);
  const long double s = -std::sin(theta);
  static constexpr int binom[5][5] = {{1}, {1, 1}, {1, 2, 1}, {1, 3, 3, 1}, {1, 4, 6, 4, 1}};
  long double cp[5] = {1.0L};
  long double sp[5] = {1.0L};
  for (int k = 1; k <= 4; ++k) {
    cp[k] = cp[k - 1] * c;
    sp[k] = sp[k - 1] * s;
  }
  long double S[5] = {};
  long double T[3] = {};
  for (int k = 0; k <= 4; ++k) {
    for (int j = 0; j <= k; ++j) {
      const long double w = binom[k][j] * cp[k - j] * sp[j];
      S[k] += w * p_[j][k - j];
      if (k <= 2) T[k] += w * q_[j][k - j];
    }
  }
  long double A[4][4] = {{S[0], S[1], S[2], T[0]},
                         {S[1], S[2], S[3], T[1]},
                         {S[2], S[3], S[4], T[2]},
                         {T[0], T[1], T[2], dd_}};
  // Symmetric elimination; the last pivot is the residual sum of squares.
  for (int i = 0; i < 3; ++i) {
    const long double piv = A[i][i];
    if (!(piv > 1e-12L * std::max<long double>(S[i + i], 1e-300L))) {
      throw Error(ErrorKind::Degenerate, "fewer than three distinct rotated rows for the roll fit", "roll");
    }
    for (int r = i + 1; r < 4; ++r) {
      const long double f = A[r][i] / piv;
      for (int k = i + 1; k < 4; ++k) A[r][k] -= f * A[i][k];
    }
  }
  return static_cast<double>(std::max<long double>(A[3][3], 0.0L));
}

int max_gss_iterations(double initial_width, double eps_theta) noexcept {
  if (initial_width <= eps_theta) return 0;
  return static_cast<int>(std::ceil(std::log(eps_theta / initial_width) / std::log(kGoldenRatio)));
}

RollEstimate estimate_roll(const DisparityMap& map, const RollOptions& options) {
  if (!(options.eps_theta > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps_theta must be positive");
  if (options.prescan_count < 0) throw Error(ErrorKind::InvalidArgument, "prescan_count must be non-negative");

  const RollEnergy energy_of(map, options);
  if (energy_of.samples() < 3) throw Error(ErrorKind::Degenerate, "roll estimation needs at least three pixels", "roll");

  // Energy failures at individual angles are tolerated; only an angle where
  // every probe failed is fatal.
  std::size_t failures = 0;
  std::size_t probes = 0;
  auto eval = [&](double theta) {
    ++probes;
    try {
      return energy_of(theta);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Degenerate) throw;
      ++failures;
      return std::numeric_limits<double>::infinity();
    }
  };

  double lo = -kPi / 2;
  double hi = kPi / 2;
  if (options.prescan_count > 0) {
    // Energy has period pi, so a bracket spilling past +-pi/2 is harmless.
    const int m = options.prescan_count;
    const double step = kPi / m;
    int best = 0;
    double best_e = std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
      const double e = eval(-kPi / 2 + (k + 0.5) * step);
      if (e < best_e) {
        best_e = e;
        best = k;
      }
    }
    const double centre = -kPi / 2 + (best + 0.5) * step;
    lo = centre - step;
    hi = centre + step;
  }

  RollEstimate est;
  est.initial_width = hi - lo;
  constexpr double k = kGoldenRatio;
  if (hi - lo > options.eps_theta) {
    double a = k * lo + (1 - k) * hi;
    double b = k * hi + (1 - k) * lo;
    double ea = eval(a);
    double eb = eval(b);
    while (hi - lo > options.eps_theta) {
      if (ea > eb) {
        lo = a;
        a = b;
        ea = eb;
        b = k * hi + (1 - k) * lo;
        eb = eval(b);
      } else {
        hi = b;
        b = a;
        eb = ea;
        a = k * lo + (1 - k) * hi;
        ea = eval(a);
      }
      ++est.iterations;
      est.bracket_widths.push_back(hi - lo);
    }
  }
  if (failures == probes && probes > 0) {
    throw Error(ErrorKind::Degenerate, "roll energy undefined at every probed angle");
  }
  est.theta = wrap_half_turn(0.5 * (lo + hi));
  est.energy = energy_of(est.theta);
  return est;
}

}  // namespace rutfinder
