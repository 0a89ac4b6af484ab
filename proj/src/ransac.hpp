#pragma once

// Consensus selection shared by the road-projection and surface fits.
//
// Each trial stores its parameter vector and one inlier/outlier ratio per
// tolerance level (tolerance halves from column to column). Selection scans
// the columns in order and stops at the first column whose highest ratio is
// held by a single parameter vector. Ratios count as equal within relative
// 1e-12; an outlier-free trial scores +inf and ties with other outlier-free
// trials. If no column resolves the tie, the lowest inlier residual sum at
// the tightest tolerance wins, then the lowest trial index.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace rutfinder::detail {

struct RansacTrial {
  std::vector<double> params;
  std::vector<double> eta;  // one entry per tolerance column
  double residual_sum = 0.0;  // inlier |residual| sum at the tightest tolerance
};

inline double inlier_ratio(std::size_t inliers, std::size_t outliers) noexcept {
  if (outliers == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(inliers) / static_cast<double>(outliers);
}

inline bool eta_equal(double a, double b) noexcept {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

struct RansacChoice {
  std::size_t trial = 0;
  int column = 0;  // 1-based column that resolved the choice; 0 = tie-break
};

inline RansacChoice select_trial(const std::vector<RansacTrial>& trials) {
  RansacChoice choice;
  if (trials.empty()) return choice;
  const std::size_t columns = trials.front().eta.size();

  std::vector<std::size_t> best;
  for (std::size_t j = 0; j < columns; ++j) {
    double top = -1.0;
    for (const auto& t : trials) top = std::max(top, t.eta[j]);
    best.clear();
    for (std::size_t i = 0; i < trials.size(); ++i) {
      if (eta_equal(trials[i].eta[j], top)) best.push_back(i);
    }
    bool unique = true;
    for (std::size_t k = 1; k < best.size() && unique; ++k) {
      unique = trials[best[k]].params == trials[best[0]].params;
    }
    if (unique) {
      choice.trial = best.front();
      choice.column = static_cast<int>(j) + 1;
      return choice;
    }
  }
  // Unresolved: `best` still holds the tied set of the last column.
  choice.trial = best.front();
  for (std::size_t i : best) {
    if (trials[i].residual_sum < trials[choice.trial].residual_sum) choice.trial = i;
  }
  choice.column = 0;
  return choice;
}

}  // namespace rutfinder::detail
