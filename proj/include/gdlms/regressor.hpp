#pragma once

#include <Eigen/Dense>
#include <deque>
#include <vector>

#include "gdlms/graph.hpp"

namespace gdlms {

/// Sparse view of a shift matrix as per-node neighbor lists (l, s_kl) with
/// s_kl != 0. The distributed regressor reads through these lists only, so
/// one update step touches nothing outside the one-hop neighborhood.
struct ShiftNeighborLists {
  explicit ShiftNeighborLists(const ShiftMatrix& s);
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> entries;
};

/// Centralized regressor Z(i) = [x(i), S x(i-1), ..., S^{M-1} x(i-M+1)].
/// history[m] = x(i-m); column m is built by m successive multiplications.
/// lead_shifts > 0 applies that many extra shifts to every column (the
/// reconstruction model uses columns S^{m+1} x(i-m)).
Eigen::MatrixXd centralized_regressor(const ShiftMatrix& s,
                                      const std::vector<Eigen::VectorXd>& history,
                                      int lead_shifts = 0);

/// Per-node regressor states z_k stacked as rows of an N x M matrix.
/// The synchronous step reads the previous-step snapshot only:
///   [z_k(i)]_1   = x_k(i)
///   [z_k(i)]_m+1 = sum_{l in N_k} s_kl [z_l(i-1)]_m
/// States are zero-primed. With lead_shift, entry 1 is instead the one-hop
/// combination sum_l s_kl x_l(i), so z_k holds [S^{m} x(i-m+1)]_k.
class RegressorNetwork {
 public:
  RegressorNetwork(const ShiftMatrix& s, int order, bool lead_shift = false);

  void step(const Eigen::VectorXd& x_new);

  /// Row k is z_k(i) after the latest step.
  const Eigen::MatrixXd& rows() const { return z_; }
  int order() const { return order_; }

 private:
  ShiftNeighborLists lists_;
  int order_;
  bool lead_shift_;
  Eigen::MatrixXd z_;       // N x M
  Eigen::MatrixXd z_prev_;  // snapshot buffer
};

}  // namespace gdlms
