#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gdlms/clustering.hpp"
#include "gdlms/graph.hpp"

namespace gdlms {

/// Hourly readings at N stations plus station coordinates. The canonical
/// files carry N = 109 stations over T = 8759 hours; synthetic stand-ins may
/// be any size.
struct TemperatureDataset {
  Eigen::MatrixXd readings;     // T x N
  Eigen::MatrixXd coordinates;  // N x 2
  int n() const { return static_cast<int>(readings.cols()); }
  int t() const { return static_cast<int>(readings.rows()); }
};

/// Normalized mean square error over the masked nodes and the given window
/// [first, last] (0-based rows, inclusive): masked error energy over masked
/// signal energy. Throws on a zero denominator.
double nmse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimates,
            const Eigen::VectorXd& mask, int first, int last);

/// Strict CSV ingestion: T rows x N numeric columns (one optional header
/// row), coordinates N rows x 2. Missing or malformed cells are rejected
/// with their row/column position; no imputation.
TemperatureDataset ingest_temperature_csv(const std::string& path_readings,
                                          const std::string& path_coords);

/// Synthetic stand-in with the same file contract as the canonical data:
/// a k-NN sensor layout whose signal follows the masked node-varying filter
/// model around a large mean level, so the reconstruction pipeline has a
/// well-posed ground truth. A nonzero mask_switch swaps the generating mask
/// to mask2 at that (1-based) time, for the tracking experiment.
TemperatureDataset gen_synthetic_temperature(
    int n, int t, int knn_k, const Eigen::VectorXd& mask, std::uint64_t seed,
    const Eigen::VectorXd& mask2 = Eigen::VectorXd(), int mask_switch = 0);

struct ReconstructConfig {
  int knn_k = 7;
  int order = 4;
  double train_fraction = 0.75;
  Eigen::VectorXd mask;   // observed indicator, length N
  Eigen::VectorXd mask2;  // used from mask_switch onward (empty: no switch)
  int mask_switch = 0;    // 1-based time of the sampling-set change
  std::string algorithm = "plms";  // lms | plms | lmsn
  bool multitask = true;           // learned clustering vs plain diffusion
  double mu = 1e-4;
  double epsilon = 0.01;
  double hessian_mu = 0.05;
  ClusteringParams clustering;
  std::vector<int> trace_nodes;  // 0-based
};

struct ReconstructResult {
  double nmse_test = 0.0;  // over unobserved nodes of the active mask
  // Tracking diagnostics (mask_switch > 0 only):
  double nmse_frozen_after_switch = -1.0;  // pre-switch coefficients
  double nmse_adapted_tail = -1.0;         // final coefficients, last window
  Eigen::MatrixXd coefficients;            // final N x M bank
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> clusters;  // E matrix
  // trace_nodes rows: (time, truth, estimate) triples per node
  std::vector<Eigen::MatrixXd> traces;
};

/// Streams x(i) = diag(mask) y(i), learns node-varying coefficients on the
/// training window with the chosen diffusion algorithm, then reconstructs
/// the test window with frozen coefficients and reports the NMSE over the
/// unobserved nodes.
ReconstructResult reconstruct_experiment(const TemperatureDataset& data,
                                         const ReconstructConfig& cfg);

/// Random observed-node indicator with round(fraction * N) ones.
Eigen::VectorXd random_mask(int n, double fraction, std::uint64_t seed);

}  // namespace gdlms
