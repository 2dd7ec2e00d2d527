#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gdlms/dataset.hpp"
#include "gdlms/engine.hpp"
#include "gdlms/theory.hpp"

namespace gdlms {

/// One algorithm/combination entry of an experiment (a figure overlays
/// several of these on the same data model).
struct VariantConfig {
  std::string label;
  std::string algorithm = "plms";  // lms | lmsn | plms | nlms
  double mu = 0.01;
  std::string mu_rule = "uniform";  // uniform | bound_fraction
  double bound_fraction = 0.05;
  double epsilon = 0.01;
  double hessian_mu = 0.05;
  std::string combination = "uniform";  // uniform|identity|oracle|learned
  std::string mechanism = "normalized";  // learned clustering flavor: normalized|raw
};

/// One ground-truth stage of a cluster scenario; ranges are 1-based
/// inclusive node intervals, one coefficient vector per range.
struct StageSpec {
  int at = 0;
  std::vector<std::pair<int, int>> cluster_ranges;
  std::vector<std::vector<double>> cluster_coeffs;
};

struct ExperimentConfig {
  // [graph]
  std::string graph_generator = "erdos_renyi";  // erdos_renyi | knn | file
  int n = 60;
  int knn_k = 5;
  std::uint64_t graph_seed = 1;
  std::string graph_file;
  std::string coords_file;
  // [shift]
  std::string shift_kind = "normalized_adjacency";
  // [filter]
  int order = 5;
  std::string coeff_source = "uniform01";  // uniform01 | explicit | stages
  std::vector<double> coeffs;
  std::vector<StageSpec> stages;
  // [signal]
  std::string source = "iid";  // iid | vertex_correlated | ar
  double var_low = 1.0;
  double var_high = 1.5;
  // [noise]
  double noise_var_low = 0.1;
  double noise_var_high = 0.15;
  // [clustering]
  ClusteringParams clustering;
  // variants ([algorithm] section, or repeated [variant:<label>] sections)
  std::vector<VariantConfig> variants;
  // [run]
  int runs = 100;
  int iters = 1000;
  std::uint64_t master_seed = 1;
  bool theory_overlay = true;
  std::vector<int> trace_nodes;     // 1-based
  std::vector<int> snapshot_iters;
  // [reconstruct] (used by the reconstruct command)
  struct Recon {
    std::string readings_file;
    std::string coords_file;
    bool synthetic = true;
    int synth_n = 48;
    int synth_t = 3600;
    std::uint64_t synth_seed = 7;
    int knn_k = 7;
    int order = 4;
    double train_fraction = 0.75;
    double mask_fraction = 0.6;
    std::uint64_t mask_seed = 3;
    int mask_switch = 0;
    double mask2_fraction = 0.6;
    std::uint64_t mask2_seed = 4;
    double mu = 1e-4;
    double mu_lms = 1e-5;
    double epsilon = 0.01;
    double hessian_mu = 0.05;
    // entries like multitask_plms, singletask_lmsn
    std::vector<std::string> algorithms = {"multitask_plms"};
    std::vector<int> trace_nodes;  // 1-based
  } recon;
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<text>");
void emit_config(const ExperimentConfig& cfg, const std::string& path);

/// Named presets reproducing the published experiment setups.
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

/// Everything drawn and derived for an experiment: the graph realization,
/// shift, signal/noise statistics, truth stages and per-variant engine
/// configs. Setup randomness comes from the master seed; per-run seeds are
/// hashed from (master seed, run index).
struct MaterializedVariant {
  std::string label;
  SimConfig sim;
  bool theory_applicable = false;
  std::vector<Eigen::MatrixXd> d_blocks;  // theory preconditioner per node
};

struct Experiment {
  Graph graph;
  ShiftMatrix shift;
  SourceSpec source;
  Eigen::VectorXd noise_variances;
  std::vector<TruthStage> stages;
  std::vector<MaterializedVariant> variants;
  int runs = 0;
  int iters = 0;
  std::uint64_t master_seed = 0;
  bool theory_overlay = true;
  SimProbes probes;
};

Experiment materialize(const ExperimentConfig& cfg);

struct McResult {
  Eigen::VectorXd msd;             // averaged over completed runs
  std::vector<int> diverged_runs;  // indices of excluded runs
  SimOutputs run0;                 // probes from run 0
};

/// Runs R seeded simulations in a worker pool and averages the MSD curves;
/// reduction order is fixed by run index so output is deterministic.
/// Diverging runs are excluded from the average and reported.
McResult run_monte_carlo(const Graph& g, const ShiftMatrix& s,
                         const SimConfig& sim, const SourceSpec& source,
                         const Eigen::VectorXd& noise_variances, int runs,
                         std::uint64_t master_seed,
                         const SimProbes& probes = {});

/// Theory transient curve and steady state for a materialized variant.
TheoryModel variant_theory_model(const Experiment& ex,
                                 const MaterializedVariant& v);

/// High-level command drivers; they write the output files and return a
/// process exit code (0 ok, 2 config error, 3 numeric divergence).
int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir,
                 bool write_cluster_snapshots);
int cmd_theory(const ExperimentConfig& cfg, const std::string& out_dir);
int cmd_reconstruct(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace gdlms
