#pragma once

// Streaming least squares by blocked Householder QR of the augmented
// system [A | b]. Rows are buffered and folded into a running triangular
// factor, so memory stays O(block * unknowns) and the residual norm comes
// straight off the factor instead of from dᵀd - dᵀA(AᵀA)⁻¹Aᵀd.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

namespace rutfinder::detail {

struct LsqSolution {
  Eigen::VectorXd x;
  double residual_sq = 0.0;
  int rank = 0;
  bool full_rank() const noexcept { return rank == static_cast<int>(x.size()); }
};

class StreamingLeastSquares {
 public:
  explicit StreamingLeastSquares(int unknowns, int block_rows = 2048)
      : n_(unknowns), block_(block_rows), buf_(block_rows + unknowns + 1, unknowns + 1) {
    buf_.setZero();
  }

  void add_row(std::span<const double> a, double b) {
    if (fill_ == 0) fill_ = n_ + 1;  // rows [0, n] hold the running factor
    for (int j = 0; j < n_; ++j) buf_(fill_, j) = a[j];
    buf_(fill_, n_) = b;
    ++fill_;
    ++rows_;
    if (fill_ == buf_.rows()) fold();
  }

  std::size_t rows() const noexcept { return rows_; }

  /// Rank is counted from the diagonal of R against rel_tol * max|R_ii|.
  LsqSolution solve(double rel_tol = 1e-10) {
    if (fill_ > n_ + 1) fold();
    LsqSolution s;
    s.x = Eigen::VectorXd::Zero(n_);
    const auto R = buf_.topLeftCorner(n_, n_);
    double rmax = 0.0;
    for (int i = 0; i < n_; ++i) rmax = std::max(rmax, std::abs(R(i, i)));
    for (int i = 0; i < n_; ++i) s.rank += std::abs(R(i, i)) > rel_tol * rmax && rmax > 0.0;
    s.residual_sq = buf_(n_, n_) * buf_(n_, n_);
    if (s.rank == n_) {
      s.x = R.triangularView<Eigen::Upper>().solve(buf_.col(n_).head(n_));
    }
    return s;
  }

 private:
  void fold() {
    Eigen::Ref<Eigen::MatrixXd> rows(buf_.topRows(fill_));
    Eigen::HouseholderQR<Eigen::Ref<Eigen::MatrixXd>> qr(rows);
    // The in-place decomposition leaves R in the upper triangle; zero the
    // Householder vectors below it so the buffer reads as [R; 0].
    const int m = n_ + 1;
    for (int j = 0; j < m; ++j) {
      for (int i = j + 1; i < fill_; ++i) buf_(i, j) = 0.0;
    }
    fill_ = m;
  }

  int n_;
  int block_;
  Eigen::MatrixXd buf_;
  int fill_ = 0;
  std::size_t rows_ = 0;
};

}  // namespace rutfinder::detail
