#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gdlms/filter.hpp"
#include "gdlms/graph.hpp"
#include "gdlms/signal.hpp"

namespace gdlms {

enum class AlgorithmKind { lms, lmsn, plms, nlms };

std::string to_string(AlgorithmKind kind);
AlgorithmKind algorithm_from_string(const std::string& name);

/// Mutable state of the adaptive network: per-node estimates and the pieces
/// each algorithm variant needs. Rows of h / psi are h_k / psi_k.
struct NetworkState {
  Eigen::MatrixXd h;            // N x M
  Eigen::MatrixXd psi;          // N x M
  Eigen::VectorXd mu;           // per-node step-sizes
  Eigen::MatrixXd combination;  // N x N left-stochastic A, entries a_lk
  Eigen::MatrixXd plms_d;       // N x M, row k = diagonal of D_k (PLMS)
  std::vector<Eigen::MatrixXd> rhat;  // per-node Hessian estimates (LMSN)
  double epsilon = 0.0;
  double hessian_mu = 0.05;  // recursion factor of the Hessian estimate
};

/// Zero-initialized state (h_k(0) = 0, R_hat(0) = 0).
NetworkState make_network_state(int n, int order, Eigen::VectorXd mu,
                                Eigen::MatrixXd combination);

/// Adaptation phase only: fills state.psi from state.h and the regressor
/// rows. Split out so a clustering pass can run between adapt and combine.
void adapt_phase(NetworkState& state, AlgorithmKind kind,
                 const Eigen::MatrixXd& zrows, const Eigen::VectorXd& y);

/// Combination phase: h <- A^T psi.
void combine_phase(NetworkState& state);

/// ATC diffusion LMS, Newton, preconditioned and epsilon-normalized steps
/// (adapt then combine, two-phase against the pre-step snapshot).
void diffusion_lms_step(NetworkState& state, const Eigen::MatrixXd& zrows,
                        const Eigen::VectorXd& y);
void lmsn_step(NetworkState& state, const Eigen::MatrixXd& zrows,
               const Eigen::VectorXd& y);
void plms_step(NetworkState& state, const Eigen::MatrixXd& zrows,
               const Eigen::VectorXd& y);
void eps_nlms_step(NetworkState& state, const Eigen::MatrixXd& zrows,
                   const Eigen::VectorXd& y);

/// One stochastic-gradient step of the centralized graph-LMS:
/// h' = h + mu Z^T (y - Z h).
Eigen::VectorXd centralized_lms_step(const Eigen::VectorXd& h,
                                     const Eigen::MatrixXd& z,
                                     const Eigen::VectorXd& y, double mu);

/// Exact second-order moments of the stacked regressor:
/// [R_Z]_{m,n} = Tr((S^{m-1})^T S^{n-1} R_x(m-n)),  r_Zy = sum_k R_{z,k} h_k.
struct GlobalMoments {
  Eigen::MatrixXd r_z;   // M x M
  Eigen::VectorXd r_zy;  // M
};
GlobalMoments compute_global_moments(const ShiftMatrix& s,
                                     const SignalStatistics& stats,
                                     const FilterModel& filter);

/// Per-node regressor covariance R_{z,k} for a length-`order` filter; rows
/// of shift powers are accumulated progressively, never forming the powers
/// for other nodes.
Eigen::MatrixXd local_covariance(const ShiftMatrix& s,
                                 const SignalStatistics& stats, int k,
                                 int order);

enum class SolveMode { exact, gradient_descent };

/// Wiener solution of R_Z h = r_Zy: exact linear solve, or gradient descent
/// h <- h + mu (r_Zy - R_Z h) for `iters` steps from zero.
Eigen::VectorXd centralized_solution(const Eigen::MatrixXd& r_z,
                                     const Eigen::VectorXd& r_zy,
                                     SolveMode mode, double mu = 0.0,
                                     int iters = 0);

/// Row k holds diag(P_k) = { ||[S^{m-1+first_power}]_{k,.}||^2 }_{m=1..M}.
/// first_power = 1 matches the lead-shifted reconstruction regressor.
Eigen::MatrixXd compute_preconditioner(const ShiftMatrix& s, int order,
                                       int first_power = 0);

/// D_k = (eps I + P_k)^{-1} as a diagonal vector.
Eigen::VectorXd d_matrix(const Eigen::VectorXd& p_k, double epsilon);

/// Uniform combination weights over the given active sets (each set must
/// contain its own node; empty sets fall back to self-only, with a note).
/// Columns sum to one.
Eigen::MatrixXd build_combination_matrix(
    const std::vector<std::vector<int>>& active_sets);

}  // namespace gdlms
