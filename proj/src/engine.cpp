#include "gdlms/engine.hpp"

#include <algorithm>
#include <cmath>

#include "gdlms/errors.hpp"
#include "gdlms/rng.hpp"

namespace gdlms {

SourceSpec SourceSpec::iid(Eigen::VectorXd variances) {
  SourceSpec s;
  s.kind = Kind::iid;
  s.variances = std::move(variances);
  return s;
}

SourceSpec SourceSpec::vertex_correlated(Eigen::VectorXd sigma2,
                                         Eigen::MatrixXd gft) {
  SourceSpec s;
  s.kind = Kind::vertex_correlated;
  s.variances = std::move(sigma2);
  s.gft = std::move(gft);
  return s;
}

SourceSpec SourceSpec::ar(const ShiftMatrix& s) {
  SourceSpec spec;
  spec.kind = Kind::ar;
  spec.ar_rx0 = solve_lyapunov(s.s);
  return spec;
}

std::unique_ptr<SignalSource> make_source(const SourceSpec& spec,
                                          const ShiftMatrix& s,
                                          std::uint64_t seed) {
  switch (spec.kind) {
    case SourceSpec::Kind::iid:
      return iid_gaussian_source(spec.variances, seed);
    case SourceSpec::Kind::vertex_correlated:
      return vertex_correlated_source(spec.variances, spec.gft, seed);
    case SourceSpec::Kind::ar:
      return ar_time_vertex_source(s, seed, spec.ar_rx0);
  }
  throw precondition_error("make_source: bad kind");
}

SignalStatistics make_stats(const SourceSpec& spec, const ShiftMatrix& s) {
  switch (spec.kind) {
    case SourceSpec::Kind::iid:
      return SignalStatistics::white(spec.variances);
    case SourceSpec::Kind::vertex_correlated:
      return SignalStatistics::white_full(
          spec.gft * spec.variances.asDiagonal() * spec.gft.transpose());
    case SourceSpec::Kind::ar: {
      if (spec.ar_rx0) {
        SignalStatistics st;
        st.rx0 = *spec.ar_rx0;
        Eigen::MatrixXd shift = s.s;
        Eigen::MatrixXd rx0 = st.rx0;
        st.autocorr = [shift, rx0](int tau) {
          Eigen::MatrixXd r = rx0;
          for (int t = 0; t < tau; ++t) r = shift * r;
          return r;
        };
        return st;
      }
      return SignalStatistics::ar(s.s);
    }
  }
  throw precondition_error("make_stats: bad kind");
}

Eigen::MatrixXd oracle_combination(const Graph& g,
                                   const std::vector<int>& cluster_of) {
  const auto nbrs = neighborhoods(g);
  std::vector<std::vector<int>> sets(g.n_nodes);
  for (int k = 0; k < g.n_nodes; ++k)
    for (int l : nbrs[k])
      if (cluster_of[l] == cluster_of[k]) sets[k].push_back(l);
  return build_combination_matrix(sets);
}

namespace {

double network_msd(const Eigen::MatrixXd& h, const Eigen::MatrixXd& truth) {
  return (h - truth).squaredNorm() / static_cast<double>(h.rows());
}

}  // namespace

SimOutputs simulate_run(const Graph& g, const ShiftMatrix& s,
                        const SimConfig& cfg, const SourceSpec& source,
                        const Eigen::VectorXd& noise_variances,
                        std::uint64_t run_seed, const SimProbes& probes) {
  const int n = g.n_nodes;
  if (cfg.stages.empty() || cfg.stages.front().start_iter != 0)
    throw precondition_error("simulate_run: first truth stage must start at 0");
  const int order = static_cast<int>(cfg.stages.front().bank.cols());

  RegressorNetwork regressor(s, order);
  auto x_source = make_source(source, s, derive_seed(run_seed, 1));
  CounterRng noise_rng(run_seed, 2);
  const Eigen::VectorXd noise_std = noise_variances.cwiseSqrt();

  // Combination matrix for the non-learned modes.
  const auto nbrs = neighborhoods(g);
  Eigen::MatrixXd a0;
  switch (cfg.combine) {
    case CombineMode::uniform:
      a0 = build_combination_matrix(nbrs);
      break;
    case CombineMode::identity:
      a0 = Eigen::MatrixXd::Identity(n, n);
      break;
    case CombineMode::oracle:
      a0 = oracle_combination(g, cfg.stages.front().cluster_of);
      break;
    case CombineMode::learned:
      a0 = Eigen::MatrixXd::Identity(n, n);  // trust starts at self only
      break;
  }

  NetworkState state = make_network_state(n, order, cfg.mu, a0);
  if (cfg.initial_h.size() > 0) {
    if (cfg.initial_h.rows() != n || cfg.initial_h.cols() != order)
      throw precondition_error("simulate_run: initial_h shape mismatch");
    state.h = cfg.initial_h;
  }
  state.epsilon = cfg.epsilon;
  state.hessian_mu = cfg.hessian_mu;
  const Eigen::MatrixXd precond = compute_preconditioner(s, order);
  if (cfg.algorithm == AlgorithmKind::plms) {
    state.plms_d.resize(n, order);
    for (int k = 0; k < n; ++k)
      state.plms_d.row(k) =
          d_matrix(precond.row(k).transpose(), cfg.epsilon).transpose();
  }

  std::optional<ClusterState> cluster;
  if (cfg.combine == CombineMode::learned)
    cluster.emplace(g, precond, cfg.clustering);

  SimOutputs out;
  out.msd = Eigen::VectorXd::Zero(cfg.iters + 1);
  out.traces.assign(probes.trace_nodes.size(),
                    Eigen::MatrixXd::Zero(cfg.iters + 1, order));
  std::vector<int> snapshot_iters = probes.snapshot_iters;
  std::sort(snapshot_iters.begin(), snapshot_iters.end());

  std::size_t stage_idx = 0;
  const TruthStage* stage = &cfg.stages[stage_idx];
  for (int i = 0; i <= cfg.iters; ++i) {
    while (stage_idx + 1 < cfg.stages.size() &&
           cfg.stages[stage_idx + 1].start_iter <= i) {
      ++stage_idx;
      stage = &cfg.stages[stage_idx];
      if (cfg.combine == CombineMode::oracle)
        state.combination = oracle_combination(g, stage->cluster_of);
    }
    out.msd[i] = network_msd(state.h, stage->bank);
    for (std::size_t j = 0; j < probes.trace_nodes.size(); ++j)
      out.traces[j].row(i) = state.h.row(probes.trace_nodes[j]);
    if (!std::isfinite(out.msd[i]) || out.msd[i] > cfg.divergence_msd) {
      out.diverged = true;
      out.diverged_at = i;
      break;
    }
    if (i == cfg.iters) break;

    regressor.step(x_source->next());
    const Eigen::MatrixXd& zrows = regressor.rows();
    Eigen::VectorXd y(n);
    for (int k = 0; k < n; ++k) {
      y[k] = zrows.row(k).dot(stage->bank.row(k));
      if (noise_std[k] > 0.0) y[k] += noise_std[k] * noise_rng.next_normal();
    }

    adapt_phase(state, cfg.algorithm, zrows, y);
    if (cluster) {
      state.combination = cluster->update(state.psi, state.h);
      if (std::binary_search(snapshot_iters.begin(), snapshot_iters.end(),
                             i + 1))
        out.e_snapshots.emplace_back(i + 1, cluster->e_matrix());
    }
    combine_phase(state);
  }

  out.final_h = state.h;
  if (cluster) out.final_e = cluster->e_matrix();
  return out;
}

}  // namespace gdlms
