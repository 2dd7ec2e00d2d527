#include "gdlms/adapt.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <iostream>

#include "gdlms/errors.hpp"

namespace gdlms {

std::string to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::lms: return "lms";
    case AlgorithmKind::lmsn: return "lmsn";
    case AlgorithmKind::plms: return "plms";
    case AlgorithmKind::nlms: return "nlms";
  }
  return "lms";
}

AlgorithmKind algorithm_from_string(const std::string& name) {
  if (name == "lms") return AlgorithmKind::lms;
  if (name == "lmsn") return AlgorithmKind::lmsn;
  if (name == "plms") return AlgorithmKind::plms;
  if (name == "nlms" || name == "eps-nlms") return AlgorithmKind::nlms;
  throw config_error("unknown algorithm: " + name);
}

NetworkState make_network_state(int n, int order, Eigen::VectorXd mu,
                                Eigen::MatrixXd combination) {
  if (mu.size() != n || combination.rows() != n || combination.cols() != n)
    throw precondition_error("make_network_state: shape mismatch");
  NetworkState st;
  st.h = Eigen::MatrixXd::Zero(n, order);
  st.psi = Eigen::MatrixXd::Zero(n, order);
  st.mu = std::move(mu);
  st.combination = std::move(combination);
  return st;
}

namespace {

void check_shapes(const NetworkState& state, const Eigen::MatrixXd& zrows,
                  const Eigen::VectorXd& y) {
  if (zrows.rows() != state.h.rows() || zrows.cols() != state.h.cols() ||
      y.size() != state.h.rows())
    throw precondition_error("adapt step: shape mismatch");
}

}  // namespace

void adapt_phase(NetworkState& state, AlgorithmKind kind,
                 const Eigen::MatrixXd& zrows, const Eigen::VectorXd& y) {
  check_shapes(state, zrows, y);
  const int n = static_cast<int>(state.h.rows());
  const int order = static_cast<int>(state.h.cols());

  switch (kind) {
    case AlgorithmKind::lms:
      for (int k = 0; k < n; ++k) {
        const double e = y[k] - zrows.row(k).dot(state.h.row(k));
        state.psi.row(k) = state.h.row(k) + (state.mu[k] * e) * zrows.row(k);
      }
      break;
    case AlgorithmKind::plms:
      if (state.plms_d.rows() != n || state.plms_d.cols() != order)
        throw precondition_error("plms: preconditioner not initialized");
      for (int k = 0; k < n; ++k) {
        const double e = y[k] - zrows.row(k).dot(state.h.row(k));
        state.psi.row(k) =
            state.h.row(k) +
            (state.mu[k] * e) * zrows.row(k).cwiseProduct(state.plms_d.row(k));
      }
      break;
    case AlgorithmKind::nlms:
      if (state.epsilon <= 0.0)
        throw precondition_error("eps-nlms: epsilon must be > 0");
      for (int k = 0; k < n; ++k) {
        const double e = y[k] - zrows.row(k).dot(state.h.row(k));
        const double denom = zrows.row(k).squaredNorm() + state.epsilon;
        state.psi.row(k) =
            state.h.row(k) + (state.mu[k] * e / denom) * zrows.row(k);
      }
      break;
    case AlgorithmKind::lmsn: {
      if (state.epsilon <= 0.0)
        throw precondition_error("lmsn: epsilon must be > 0");
      if (!(state.hessian_mu > 0.0 && state.hessian_mu <= 0.1))
        throw precondition_error("lmsn: hessian recursion factor in (0, 0.1]");
      if (state.rhat.size() != static_cast<std::size_t>(n))
        state.rhat.assign(n, Eigen::MatrixXd::Zero(order, order));
      for (int k = 0; k < n; ++k) {
        Eigen::MatrixXd& rhat = state.rhat[k];
        rhat = (1.0 - state.hessian_mu) * rhat +
               state.hessian_mu *
                   (zrows.row(k).transpose() * zrows.row(k));
        const double e = y[k] - zrows.row(k).dot(state.h.row(k));
        Eigen::MatrixXd reg = rhat;
        reg.diagonal().array() += state.epsilon;
        // SPD solve; the explicit inverse is never formed.
        Eigen::LLT<Eigen::MatrixXd> llt(reg);
        if (llt.info() != Eigen::Success)
          throw numeric_error("lmsn: regularized Hessian not SPD");
        const Eigen::VectorXd dir = llt.solve(zrows.row(k).transpose());
        state.psi.row(k) =
            state.h.row(k) + (state.mu[k] * e) * dir.transpose();
      }
      break;
    }
  }
}

void combine_phase(NetworkState& state) {
  state.h = state.combination.transpose() * state.psi;
}

void diffusion_lms_step(NetworkState& state, const Eigen::MatrixXd& zrows,
                        const Eigen::VectorXd& y) {
  adapt_phase(state, AlgorithmKind::lms, zrows, y);
  combine_phase(state);
}

void lmsn_step(NetworkState& state, const Eigen::MatrixXd& zrows,
               const Eigen::VectorXd& y) {
  adapt_phase(state, AlgorithmKind::lmsn, zrows, y);
  combine_phase(state);
}

void plms_step(NetworkState& state, const Eigen::MatrixXd& zrows,
               const Eigen::VectorXd& y) {
  adapt_phase(state, AlgorithmKind::plms, zrows, y);
  combine_phase(state);
}

void eps_nlms_step(NetworkState& state, const Eigen::MatrixXd& zrows,
                   const Eigen::VectorXd& y) {
  adapt_phase(state, AlgorithmKind::nlms, zrows, y);
  combine_phase(state);
}

Eigen::VectorXd centralized_lms_step(const Eigen::VectorXd& h,
                                     const Eigen::MatrixXd& z,
                                     const Eigen::VectorXd& y, double mu) {
  return h + mu * (z.transpose() * (y - z * h));
}

GlobalMoments compute_global_moments(const ShiftMatrix& s,
                                     const SignalStatistics& stats,
                                     const FilterModel& filter) {
  const int n = s.size();
  const int order = filter.order();
  std::vector<Eigen::MatrixXd> powers(order);
  powers[0] = Eigen::MatrixXd::Identity(n, n);
  for (int m = 1; m < order; ++m) powers[m] = powers[m - 1] * s.s;

  GlobalMoments out;
  out.r_z.resize(order, order);
  for (int m = 0; m < order; ++m)
    for (int nn = 0; nn < order; ++nn) {
      const Eigen::MatrixXd d = powers[nn] * stats.rx(m - nn);
      out.r_z(m, nn) = powers[m].cwiseProduct(d).sum();
    }
  out.r_z = ((out.r_z + out.r_z.transpose()) / 2.0).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.r_z,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() == Eigen::Success && es.eigenvalues().minCoeff() < -1e-10)
    std::cerr << "compute_global_moments: R_Z numerically indefinite "
              << "(min eigenvalue " << es.eigenvalues().minCoeff() << ")\n";

  if (stats.rxy) {
    // [r_Zy]_m = Tr((S^{m-1})^T R_xy(m-1)); the lag is m-1 so that the
    // Wiener identity R_Z h = r_Zy holds under the data model.
    out.r_zy.resize(order);
    for (int m = 0; m < order; ++m)
      out.r_zy[m] = powers[m].cwiseProduct(stats.rxy(m)).sum();
  } else {
    // Derived from the data model with noise independent of x:
    // r_Zy = sum_k R_{z,k} h_k (equals R_Z h for a node-invariant filter).
    out.r_zy = Eigen::VectorXd::Zero(order);
    for (int k = 0; k < n; ++k)
      out.r_zy += local_covariance(s, stats, k, order) * filter.at(k);
  }
  return out;
}

Eigen::MatrixXd local_covariance(const ShiftMatrix& s,
                                 const SignalStatistics& stats, int k,
                                 int order) {
  const int n = s.size();
  if (k < 0 || k >= n) throw precondition_error("local_covariance: bad node");
  if (order < 1) throw precondition_error("local_covariance: order >= 1");
  // rows[m] = [S^m]_{k,.} accumulated by row-vector/matrix products.
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(order, n);
  rows(0, k) = 1.0;
  for (int m = 1; m < order; ++m) rows.row(m) = rows.row(m - 1) * s.s;

  Eigen::MatrixXd r(order, order);
  for (int m = 0; m < order; ++m)
    for (int nn = 0; nn <= m; ++nn) {
      // E{z_m z_n} = [S^{n}]_{k,.} R_x(m-n) ([S^{m}]_{k,.})^T  (0-based m,n)
      const double val = rows.row(nn) * stats.rx(m - nn) *
                         rows.row(m).transpose();
      r(m, nn) = val;
      r(nn, m) = val;
    }
  return r;
}

Eigen::VectorXd d_matrix(const Eigen::VectorXd& p_k, double epsilon) {
  Eigen::VectorXd d(p_k.size());
  for (int m = 0; m < p_k.size(); ++m) {
    const double denom = epsilon + p_k[m];
    if (denom <= 0.0)
      throw precondition_error("d_matrix: eps + p must be > 0");
    d[m] = 1.0 / denom;
  }
  return d;
}

Eigen::MatrixXd compute_preconditioner(const ShiftMatrix& s, int order,
                                       int first_power) {
  const int n = s.size();
  if (first_power < 0)
    throw precondition_error("compute_preconditioner: first_power >= 0");
  Eigen::MatrixXd p(n, order);
  for (int k = 0; k < n; ++k) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
    row[k] = 1.0;  // [S^0]_{k,.}
    for (int hop = 0; hop < first_power; ++hop) row = row * s.s;
    for (int m = 0; m < order; ++m) {
      p(k, m) = row.squaredNorm();
      if (m + 1 < order) row = row * s.s;
    }
  }
  return p;
}

Eigen::VectorXd centralized_solution(const Eigen::MatrixXd& r_z,
                                     const Eigen::VectorXd& r_zy,
                                     SolveMode mode, double mu, int iters) {
  const int order = static_cast<int>(r_z.rows());
  if (r_z.cols() != order || r_zy.size() != order)
    throw precondition_error("centralized_solution: shape mismatch");
  if (mode == SolveMode::exact) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(r_z);
    if (!lu.isInvertible())
      throw numeric_error(
          "centralized_solution: R_Z is rank-deficient; consider a ridge "
          "fallback (R_Z + delta I)");
    return lu.solve(r_zy);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r_z,
                                                    Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(mu > 0.0 && mu < 2.0 / lmax))
    throw precondition_error(
        "centralized_solution: gradient mode needs 0 < mu < 2/lambda_max");
  Eigen::VectorXd h = Eigen::VectorXd::Zero(order);
  for (int it = 0; it < iters; ++it) h += mu * (r_zy - r_z * h);
  return h;
}

Eigen::MatrixXd build_combination_matrix(
    const std::vector<std::vector<int>>& active_sets) {
  const int n = static_cast<int>(active_sets.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const std::vector<int>* set = &active_sets[k];
    std::vector<int> self{k};
    if (set->empty()) {
      std::cerr << "build_combination_matrix: empty active set at node "
                << k + 1 << ", falling back to self-loop\n";
      set = &self;
    }
    bool has_self = false;
    for (int l : *set) {
      if (l < 0 || l >= n)
        throw precondition_error("build_combination_matrix: bad node index");
      if (l == k) has_self = true;
    }
    if (!has_self)
      throw precondition_error(
          "build_combination_matrix: active set must contain the node itself");
    const double w = 1.0 / static_cast<double>(set->size());
    for (int l : *set) a(l, k) = w;
  }
  return a;
}

}  // namespace gdlms
