#include "gdlms/regressor.hpp"

#include "gdlms/errors.hpp"

namespace gdlms {

ShiftNeighborLists::ShiftNeighborLists(const ShiftMatrix& s)
    : n(s.size()), entries(static_cast<std::size_t>(s.size())) {
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      if (s.s(k, l) != 0.0) entries[k].emplace_back(l, s.s(k, l));
}

Eigen::MatrixXd centralized_regressor(
    const ShiftMatrix& s, const std::vector<Eigen::VectorXd>& history,
    int lead_shifts) {
  const int n = s.size();
  const int order = static_cast<int>(history.size());
  if (order < 1)
    throw precondition_error("centralized_regressor: history shorter than M");
  Eigen::MatrixXd z(n, order);
  for (int m = 0; m < order; ++m) {
    if (history[m].size() != n)
      throw precondition_error("centralized_regressor: history size mismatch");
    Eigen::VectorXd col = history[m];
    for (int hop = 0; hop < m + lead_shifts; ++hop) col = s.s * col;
    z.col(m) = col;
  }
  return z;
}

RegressorNetwork::RegressorNetwork(const ShiftMatrix& s, int order,
                                   bool lead_shift)
    : lists_(s), order_(order), lead_shift_(lead_shift) {
  if (order < 1) throw precondition_error("RegressorNetwork: order >= 1");
  z_ = Eigen::MatrixXd::Zero(lists_.n, order);
  z_prev_ = z_;
}

void RegressorNetwork::step(const Eigen::VectorXd& x_new) {
  if (x_new.size() != lists_.n)
    throw precondition_error("RegressorNetwork: x size mismatch");
  z_prev_.swap(z_);
  for (int k = 0; k < lists_.n; ++k) {
    if (lead_shift_) {
      double acc = 0.0;
      for (const auto& [l, w] : lists_.entries[k]) acc += w * x_new[l];
      z_(k, 0) = acc;
    } else {
      z_(k, 0) = x_new[k];
    }
    for (int m = 1; m < order_; ++m) {
      double acc = 0.0;
      for (const auto& [l, w] : lists_.entries[k]) acc += w * z_prev_(l, m - 1);
      z_(k, m) = acc;
    }
  }
}

}  // namespace gdlms
