#pragma once

#include <Eigen/Dense>

#include "gdlms/errors.hpp"

namespace gdlms {

/// Polynomial graph-filter coefficients. Node-invariant filters hold one
/// M-vector; node-varying filters hold an N x M bank with row k the
/// coefficients of node k. A bank with identical rows behaves exactly like
/// the node-invariant model.
class FilterModel {
 public:
  static FilterModel invariant(Eigen::VectorXd h) {
    check_finite(h);
    FilterModel f;
    f.invariant_ = true;
    f.bank_ = h.transpose();
    return f;
  }

  static FilterModel varying(Eigen::MatrixXd bank) {
    check_finite(bank.reshaped());
    FilterModel f;
    f.invariant_ = false;
    f.bank_ = std::move(bank);
    return f;
  }

  int order() const { return static_cast<int>(bank_.cols()); }
  bool node_invariant() const { return invariant_; }

  /// Coefficients of node k (the shared vector when node-invariant).
  Eigen::VectorXd at(int k) const {
    return invariant_ ? bank_.row(0).transpose() : bank_.row(k).transpose();
  }

  /// Node-invariant coefficient vector; throws for a varying bank.
  const Eigen::VectorXd coeffs() const {
    if (!invariant_)
      throw precondition_error("FilterModel: node-varying bank has no single h");
    return bank_.row(0).transpose();
  }

  /// Full N x M bank (broadcast when node-invariant).
  Eigen::MatrixXd bank(int n_nodes) const {
    if (!invariant_) return bank_;
    return bank_.replicate(n_nodes, 1);
  }

 private:
  static void check_finite(const Eigen::VectorXd& v) {
    if (!v.allFinite())
      throw precondition_error("FilterModel: coefficients must be finite");
  }
  bool invariant_ = true;
  Eigen::MatrixXd bank_;  // 1 x M when invariant, N x M otherwise
};

}  // namespace gdlms
