#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "gdlms/adapt.hpp"
#include "gdlms/clustering.hpp"
#include "gdlms/graph.hpp"
#include "gdlms/regressor.hpp"
#include "gdlms/signal.hpp"

namespace gdlms {

/// Input-signal description, per-run sources are built from it with
/// run-indexed seeds. The AR kind caches the Lyapunov solution so streams
/// do not re-solve it.
struct SourceSpec {
  enum class Kind { iid, vertex_correlated, ar } kind = Kind::iid;
  Eigen::VectorXd variances;
  Eigen::MatrixXd gft;  // orthonormal mixing for vertex_correlated
  std::optional<Eigen::MatrixXd> ar_rx0;

  static SourceSpec iid(Eigen::VectorXd variances);
  static SourceSpec vertex_correlated(Eigen::VectorXd sigma2,
                                      Eigen::MatrixXd gft);
  static SourceSpec ar(const ShiftMatrix& s);
};

std::unique_ptr<SignalSource> make_source(const SourceSpec& spec,
                                          const ShiftMatrix& s,
                                          std::uint64_t seed);
SignalStatistics make_stats(const SourceSpec& spec, const ShiftMatrix& s);

/// One segment of the ground truth: active from start_iter, with a
/// materialized N x M coefficient bank and a cluster id per node.
struct TruthStage {
  int start_iter = 0;
  Eigen::MatrixXd bank;
  std::vector<int> cluster_of;
};

enum class CombineMode { uniform, identity, oracle, learned };

struct SimConfig {
  AlgorithmKind algorithm = AlgorithmKind::plms;
  Eigen::VectorXd mu;
  double epsilon = 0.01;
  double hessian_mu = 0.05;
  CombineMode combine = CombineMode::uniform;
  ClusteringParams clustering;
  int iters = 1000;
  std::vector<TruthStage> stages;  // first stage must start at 0
  double divergence_msd = 1e12;
  Eigen::MatrixXd initial_h;  // empty: zero initialization
};

struct SimProbes {
  std::vector<int> snapshot_iters;  // cluster matrix checkpoints
  std::vector<int> trace_nodes;     // coefficient trajectories
};

struct SimOutputs {
  Eigen::VectorXd msd;  // length iters + 1, msd[i] measured before update i
  bool diverged = false;
  int diverged_at = -1;
  Eigen::MatrixXd final_h;
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> final_e;
  std::vector<std::pair<int, Eigen::Matrix<char, Eigen::Dynamic,
                                           Eigen::Dynamic>>> e_snapshots;
  // traces[j] is (iters+1) x M for trace node j
  std::vector<Eigen::MatrixXd> traces;
};

/// One seeded run of the full network loop: regressor update, observation
/// synthesis through the data model, adaptation, optional clustering pass,
/// combination. MSD is measured against the stage truth in force.
SimOutputs simulate_run(const Graph& g, const ShiftMatrix& s,
                        const SimConfig& cfg, const SourceSpec& source,
                        const Eigen::VectorXd& noise_variances,
                        std::uint64_t run_seed, const SimProbes& probes = {});

/// Oracle combination matrix: uniform weights over same-cluster neighbors.
Eigen::MatrixXd oracle_combination(const Graph& g,
                                   const std::vector<int>& cluster_of);

}  // namespace gdlms
