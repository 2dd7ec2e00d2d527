#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gdlms/adapt.hpp"

namespace gdlms {

struct ClusteringParams {
  double tau = 0.9;    // explained-variance level for M_k selection
  double beta = 0.01;  // similarity distance threshold
  double theta = 0.5;  // trust threshold
  double nu = 0.98;    // trust forgetting factor
  bool normalized = true;  // normalized similarity on M_k entries; false
                           // uses the raw full-length distance test
};

/// Smallest M_k whose sorted cumulative variance proportion reaches tau,
/// with the selected original indices. Ties break by original index.
/// All-zero p_k degenerates to keeping every entry.
struct MkSelection {
  int m_k = 0;
  std::vector<int> indices;  // original positions, in decreasing-p order
};
MkSelection select_mk(const Eigen::VectorXd& p_k, double tau);

/// Normalized similarity test on the selected entries:
/// b = 1 iff ||psi'_l - h'_k||^2 / ||h'_k||^2 <= beta.
/// While ||h'_k||^2 < 1e-12 the test is skipped and `prev` is returned,
/// since the ratio is undefined and early estimates carry no task
/// information.
bool similarity_bit(const Eigen::VectorXd& psi_l, const Eigen::VectorXd& h_k,
                    const std::vector<int>& indices, double beta,
                    bool prev = false);

/// Unnormalized full-length variant: b = 1 iff ||psi_l - h_k||^2 <= beta.
bool similarity_bit_raw(const Eigen::VectorXd& psi_l,
                        const Eigen::VectorXd& h_k, double beta);

/// t(i) = nu t(i-1) + (1 - nu) b(i).
double update_trust(double t_prev, bool b, double nu);

/// Per-node online clustering state: trust matrix, 0/1 cluster matrix E_i,
/// truncation dimensions M_k. Nodes start trusting only themselves.
class ClusterState {
 public:
  ClusterState(const Graph& g, const Eigen::MatrixXd& preconditioner_p,
               ClusteringParams params);

  /// Runs the per-iteration clustering pass between adapt and combine:
  /// similarity bits from (psi, pre-adapt h), trust smoothing, E update,
  /// and returns the rebuilt combination matrix over the active sets.
  Eigen::MatrixXd update(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& h);

  const Eigen::MatrixXd& trust() const { return trust_; }
  const Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic>& e_matrix() const {
    return e_;
  }
  const std::vector<std::vector<int>>& active_sets() const { return sets_; }
  const std::vector<MkSelection>& mk() const { return mk_; }
  const ClusteringParams& params() const { return params_; }

 private:
  ClusteringParams params_;
  std::vector<std::vector<int>> neighbors_;  // N_k including self
  std::vector<MkSelection> mk_;
  Eigen::MatrixXd trust_;  // t_lk, column k = opinions held by node k
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> e_;
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> prev_b_;
  std::vector<std::vector<int>> sets_;
};

/// E_i and active sets from a trust matrix: [E]_lk = 1 iff t_lk >= theta and
/// l is a neighbor of k; N_{k,i} = {k} plus trusted neighbors.
struct ClusterDecision {
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> e;
  std::vector<std::vector<int>> active_sets;
};
ClusterDecision update_cluster_matrix(
    const Eigen::MatrixXd& trust, double theta,
    const std::vector<std::vector<int>>& neighbors);

}  // namespace gdlms
