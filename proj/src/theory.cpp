#include "gdlms/theory.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <limits>

#include "gdlms/errors.hpp"
#include "gdlms/linalg.hpp"

namespace gdlms {

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw numeric_error("psd_sqrt: eigensolve failed");
  const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clamped.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

constexpr int kFFormCap = 40;  // NM beyond this makes (NM)^2 forms impractical

void require_f_feasible(const TheoryModel& tm, const char* who) {
  if (tm.dim() > kFFormCap)
    throw precondition_error(std::string(who) +
                             ": NM exceeds the F-form cap of 40; use the "
                             "B-form recursion instead");
}

}  // namespace

TheoryModel build_theory_model(const ShiftMatrix& s,
                               const Eigen::MatrixXd& combination,
                               const Eigen::VectorXd& mu,
                               const std::vector<Eigen::MatrixXd>& d_blocks,
                               const SignalStatistics& stats,
                               const NoiseModel& noise,
                               const Eigen::VectorXd& h_tilde0, int order) {
  const int n = s.size();
  if (combination.rows() != n || combination.cols() != n || mu.size() != n ||
      noise.variances.size() != n || h_tilde0.size() != n * order)
    throw precondition_error("build_theory_model: shape mismatch");
  if (!d_blocks.empty() && d_blocks.size() != static_cast<std::size_t>(n))
    throw precondition_error("build_theory_model: need one D_k per node");

  TheoryModel tm;
  tm.n_nodes = n;
  tm.order = order;
  tm.mu = mu;
  tm.h_tilde0 = h_tilde0;
  tm.cal_a = kron(combination, Eigen::MatrixXd::Identity(order, order));

  tm.r_z.reserve(n);
  tm.d.reserve(n);
  for (int k = 0; k < n; ++k) {
    tm.r_z.push_back(local_covariance(s, stats, k, order));
    if (d_blocks.empty())
      tm.d.push_back(Eigen::MatrixXd::Identity(order, order));
    else if (d_blocks[k].rows() != order || d_blocks[k].cols() != order)
      throw precondition_error("build_theory_model: D_k must be M x M");
    else
      tm.d.push_back(d_blocks[k]);
  }

  const int nm = n * order;
  Eigen::MatrixXd mdr = Eigen::MatrixXd::Zero(nm, nm);   // calM calD calRz
  Eigen::MatrixXd mds = Eigen::MatrixXd::Zero(nm, nm);   // calM calD calS^1/2
  for (int k = 0; k < n; ++k) {
    const auto blk = [&](Eigen::MatrixXd& m) {
      return m.block(k * order, k * order, order, order);
    };
    Eigen::MatrixXd md = tm.mu[k] * tm.d[k];
    blk(mdr) = md * tm.r_z[k];
    blk(mds) = md * (std::sqrt(noise.variances[k]) * psd_sqrt(tm.r_z[k]));
  }
  tm.cal_b = tm.cal_a.transpose() *
             (Eigen::MatrixXd::Identity(nm, nm) - mdr);
  tm.g_sqrt = tm.cal_a.transpose() * mds;
  tm.cal_g = tm.g_sqrt * tm.g_sqrt.transpose();
  return tm;
}

std::vector<Eigen::VectorXd> mean_error_trajectory(const TheoryModel& tm,
                                                   int iters) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(iters + 1);
  out.push_back(tm.h_tilde0);
  for (int i = 0; i < iters; ++i) out.push_back(tm.cal_b * out.back());
  return out;
}

MeanStability mean_stability(const TheoryModel& tm) {
  MeanStability st;
  st.rho = spectral_radius(tm.cal_b);
  st.marginal = std::abs(st.rho - 1.0) < 1e-10;
  st.is_stable = st.rho < 1.0 && !st.marginal;
  st.sufficient_bounds.resize(tm.n_nodes);
  for (int k = 0; k < tm.n_nodes; ++k) {
    // lambda_max(D_k R_zk) through the symmetric product D^1/2 R D^1/2.
    const Eigen::MatrixXd dsqrt = psd_sqrt(tm.d[k]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        dsqrt * tm.r_z[k] * dsqrt, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    st.sufficient_bounds[k] =
        lmax > 0.0 ? 2.0 / lmax : std::numeric_limits<double>::infinity();
  }
  return st;
}

std::vector<double> transient_msd_F(const TheoryModel& tm, int iters) {
  require_f_feasible(tm, "transient_msd_F");
  const int nm = tm.dim();
  const Eigen::MatrixXd f = kron(tm.cal_b.transpose(), tm.cal_b.transpose());
  const Eigen::MatrixXd h0 = tm.h_tilde0 * tm.h_tilde0.transpose();
  const Eigen::VectorXd h0vec = h0.reshaped();
  const Eigen::MatrixXd gt = tm.cal_g.transpose();
  const Eigen::VectorXd gvec = gt.reshaped();
  const Eigen::VectorXd r = f.transpose() * h0vec - h0vec + gvec;
  Eigen::VectorXd w = Eigen::MatrixXd::Identity(nm, nm).reshaped();

  std::vector<double> zeta;
  zeta.reserve(iters + 1);
  zeta.push_back(tm.h_tilde0.squaredNorm() / tm.n_nodes);
  for (int i = 0; i < iters; ++i) {
    zeta.push_back(zeta.back() + r.dot(w) / tm.n_nodes);
    w = f * w;
  }
  return zeta;
}

std::vector<double> transient_msd_B(const TheoryModel& tm, int iters) {
  std::vector<double> zeta;
  zeta.reserve(iters + 1);
  zeta.push_back(tm.h_tilde0.squaredNorm() / tm.n_nodes);
  Eigen::MatrixXd w = tm.g_sqrt;   // B^i g_sqrt
  Eigen::VectorXd u = tm.h_tilde0;  // B^i h_tilde0
  for (int i = 0; i < iters; ++i) {
    const Eigen::VectorXd u_next = tm.cal_b * u;
    const double inc =
        w.squaredNorm() + u_next.squaredNorm() - u.squaredNorm();
    zeta.push_back(zeta.back() + inc / tm.n_nodes);
    u = u_next;
    if (i + 1 < iters) w = tm.cal_b * w;
  }
  return zeta;
}

double steady_state_msd(const TheoryModel& tm, SteadyStateForm form) {
  const double rho = spectral_radius(tm.cal_b);
  if (rho >= 1.0)
    throw numeric_error("steady_state_msd: calB is unstable (rho = " +
                        std::to_string(rho) + "), MSD diverges");
  if (form == SteadyStateForm::F) {
    require_f_feasible(tm, "steady_state_msd");
    const int nm = tm.dim();
    const Eigen::MatrixXd f = kron(tm.cal_b.transpose(), tm.cal_b.transpose());
    const Eigen::VectorXd rhs = Eigen::MatrixXd::Identity(nm, nm).reshaped();
    const Eigen::MatrixXd lhs =
        Eigen::MatrixXd::Identity(nm * nm, nm * nm) - f;
    const Eigen::VectorXd q = lhs.partialPivLu().solve(rhs);
    const Eigen::MatrixXd gt = tm.cal_g.transpose();
    const Eigen::VectorXd gvec = gt.reshaped();
    return gvec.dot(q) / tm.n_nodes;
  }
  // Series form: sum_i Tr(B^i G (B^i)^T) = sum_i ||B^i g_sqrt||_F^2.
  Eigen::MatrixXd w = tm.g_sqrt;
  double sum = 0.0;
  for (long i = 0; i < 1000000; ++i) {
    const double term = w.squaredNorm();
    sum += term;
    if (term < 1e-12 * sum) break;
    w = tm.cal_b * w;
  }
  return sum / tm.n_nodes;
}

std::vector<ModeTimeConstant> time_constants(double mu,
                                             const Eigen::VectorXd& eigs,
                                             const Eigen::VectorXd& d_diag) {
  if (eigs.size() != d_diag.size())
    throw precondition_error("time_constants: size mismatch");
  if (eigs.minCoeff() <= 0.0)
    throw precondition_error("time_constants: eigenvalues must be > 0");
  std::vector<ModeTimeConstant> out(eigs.size());
  for (int m = 0; m < eigs.size(); ++m) {
    out[m].plain = 1.0 / (2.0 * mu * eigs[m]);
    out[m].preconditioned = 1.0 / (2.0 * mu * d_diag[m] * eigs[m]);
  }
  return out;
}

}  // namespace gdlms
