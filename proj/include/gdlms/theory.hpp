#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gdlms/adapt.hpp"
#include "gdlms/graph.hpp"
#include "gdlms/signal.hpp"

namespace gdlms {

/// Closed-form performance model of the diffusion network. Block dimensions:
/// calA = A (x) I_M, calB = calA^T (I - calM calD calRz),
/// calG = calA^T calM calD calS calD calM calA with calS = bdiag{sigma2_v R_zk}.
/// g_sqrt satisfies calG = g_sqrt g_sqrt^T and drives the O(NM) recursions.
struct TheoryModel {
  int n_nodes = 0;
  int order = 0;
  Eigen::MatrixXd cal_a;
  Eigen::MatrixXd cal_b;
  Eigen::MatrixXd cal_g;
  Eigen::MatrixXd g_sqrt;
  std::vector<Eigen::MatrixXd> r_z;  // per-node R_{z,k}
  std::vector<Eigen::MatrixXd> d;    // per-node D_k
  Eigen::VectorXd mu;
  Eigen::VectorXd h_tilde0;  // stacked initial error, length NM

  int dim() const { return n_nodes * order; }
};

/// Assembles the model. Empty `d_blocks` means D_k = I (plain diffusion LMS).
/// h_tilde0 is the stacked h_o - h_k(0); for zero-initialized algorithms pass
/// the stacked true coefficients.
TheoryModel build_theory_model(const ShiftMatrix& s,
                               const Eigen::MatrixXd& combination,
                               const Eigen::VectorXd& mu,
                               const std::vector<Eigen::MatrixXd>& d_blocks,
                               const SignalStatistics& stats,
                               const NoiseModel& noise,
                               const Eigen::VectorXd& h_tilde0, int order);

/// { B^i h_tilde0 } for i = 0..iters.
std::vector<Eigen::VectorXd> mean_error_trajectory(const TheoryModel& tm,
                                                   int iters);

struct MeanStability {
  double rho = 0.0;       // spectral radius of calB
  bool is_stable = false;
  bool marginal = false;  // |rho - 1| below tolerance
  Eigen::VectorXd sufficient_bounds;  // per-node 2 / lambda_max(D_k R_zk)
};
MeanStability mean_stability(const TheoryModel& tm);

/// Transient network MSD via the (NM)^2 form; enforced cap NM <= 40.
/// zeta[0] = ||h_tilde0||^2 / N.
std::vector<double> transient_msd_F(const TheoryModel& tm, int iters);

/// Same sequence via the O(NM)-sized recursion (one matrix product per step).
std::vector<double> transient_msd_B(const TheoryModel& tm, int iters);

enum class SteadyStateForm { F, series };

/// Steady-state network MSD. The series form truncates when a term falls
/// below 1e-12 of the running sum (hard cap 1e6 terms); the F form obeys the
/// NM <= 40 cap. Throws numeric_error when calB is unstable.
double steady_state_msd(const TheoryModel& tm, SteadyStateForm form);

struct ModeTimeConstant {
  double plain = 0.0;
  double preconditioned = 0.0;
};

/// Per-mode time constants 1/(2 mu lambda_m) and 1/(2 mu d_m lambda_m).
std::vector<ModeTimeConstant> time_constants(double mu,
                                             const Eigen::VectorXd& eigs,
                                             const Eigen::VectorXd& d_diag);

}  // namespace gdlms
