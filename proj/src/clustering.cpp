#include "gdlms/clustering.hpp"

#include <algorithm>
#include <numeric>

#include "gdlms/errors.hpp"

namespace gdlms {

MkSelection select_mk(const Eigen::VectorXd& p_k, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw precondition_error("select_mk: tau must be in (0, 1)");
  if (p_k.minCoeff() < 0.0)
    throw precondition_error("select_mk: p entries must be >= 0");
  const int order = static_cast<int>(p_k.size());
  const double total = p_k.sum();

  MkSelection sel;
  sel.indices.resize(order);
  std::iota(sel.indices.begin(), sel.indices.end(), 0);
  if (total <= 0.0) {  // degenerate: keep everything
    sel.m_k = order;
    return sel;
  }
  std::stable_sort(sel.indices.begin(), sel.indices.end(),
                   [&](int a, int b) { return p_k[a] > p_k[b]; });
  double cum = 0.0;
  for (int m = 0; m < order; ++m) {
    cum += p_k[sel.indices[m]] / total;
    if (cum >= tau) {
      sel.m_k = m + 1;
      sel.indices.resize(sel.m_k);
      return sel;
    }
  }
  sel.m_k = order;
  return sel;
}

bool similarity_bit(const Eigen::VectorXd& psi_l, const Eigen::VectorXd& h_k,
                    const std::vector<int>& indices, double beta,
                    bool prev) {
  if (beta <= 0.0) throw precondition_error("similarity_bit: beta > 0");
  double dist2 = 0.0;
  double norm2 = 0.0;
  for (int idx : indices) {
    const double d = psi_l[idx] - h_k[idx];
    dist2 += d * d;
    norm2 += h_k[idx] * h_k[idx];
  }
  if (norm2 < 1e-12) return prev;
  return dist2 / norm2 <= beta;
}

bool similarity_bit_raw(const Eigen::VectorXd& psi_l,
                        const Eigen::VectorXd& h_k, double beta) {
  if (beta <= 0.0) throw precondition_error("similarity_bit_raw: beta > 0");
  return (psi_l - h_k).squaredNorm() <= beta;
}

double update_trust(double t_prev, bool b, double nu) {
  if (!(nu >= 0.0 && nu < 1.0))
    throw precondition_error("update_trust: nu must be in [0, 1)");
  return nu * t_prev + (1.0 - nu) * (b ? 1.0 : 0.0);
}

ClusterDecision update_cluster_matrix(
    const Eigen::MatrixXd& trust, double theta,
    const std::vector<std::vector<int>>& neighbors) {
  if (!(theta > 0.0 && theta < 1.0))
    throw precondition_error("update_cluster_matrix: theta must be in (0, 1)");
  const int n = static_cast<int>(trust.rows());
  ClusterDecision out;
  out.e.setZero(n, n);
  out.active_sets.assign(n, {});
  for (int k = 0; k < n; ++k) {
    out.e(k, k) = 1;
    out.active_sets[k].push_back(k);
    for (int l : neighbors[k]) {
      if (l == k) continue;
      if (trust(l, k) >= theta) {
        out.e(l, k) = 1;
        out.active_sets[k].push_back(l);
      }
    }
  }
  return out;
}

ClusterState::ClusterState(const Graph& g,
                           const Eigen::MatrixXd& preconditioner_p,
                           ClusteringParams params)
    : params_(params), neighbors_(neighborhoods(g)) {
  const int n = g.n_nodes;
  mk_.reserve(n);
  for (int k = 0; k < n; ++k) {
    if (params_.normalized) {
      mk_.push_back(select_mk(preconditioner_p.row(k), params_.tau));
    } else {
      // Raw mechanism: full-length distances, M_k = M.
      MkSelection all;
      all.m_k = static_cast<int>(preconditioner_p.cols());
      all.indices.resize(all.m_k);
      std::iota(all.indices.begin(), all.indices.end(), 0);
      mk_.push_back(std::move(all));
    }
  }
  // Nodes start non-cooperative: trust 0 everywhere except self.
  trust_ = Eigen::MatrixXd::Zero(n, n);
  trust_.diagonal().setOnes();
  e_.setZero(n, n);
  for (int k = 0; k < n; ++k) e_(k, k) = 1;
  prev_b_.setZero(n, n);
  sets_.assign(n, {});
  for (int k = 0; k < n; ++k) sets_[k].push_back(k);
}

Eigen::MatrixXd ClusterState::update(const Eigen::MatrixXd& psi,
                                     const Eigen::MatrixXd& h) {
  const int n = static_cast<int>(psi.rows());
  for (int k = 0; k < n; ++k) {
    for (int l : neighbors_[k]) {
      if (l == k) continue;
      bool b;
      if (params_.normalized) {
        b = similarity_bit(psi.row(l), h.row(k), mk_[k].indices, params_.beta,
                           prev_b_(l, k) != 0);
      } else {
        b = similarity_bit_raw(psi.row(l), h.row(k), params_.beta);
      }
      prev_b_(l, k) = b ? 1 : 0;
      trust_(l, k) = update_trust(trust_(l, k), b, params_.nu);
    }
  }
  ClusterDecision decision =
      update_cluster_matrix(trust_, params_.theta, neighbors_);
  e_ = std::move(decision.e);
  sets_ = std::move(decision.active_sets);
  return build_combination_matrix(sets_);
}

}  // namespace gdlms
