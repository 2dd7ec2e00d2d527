#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gdlms {

/// Undirected weighted graph: symmetric nonnegative adjacency with zero
/// diagonal, connected by construction. Coordinates are kept when the graph
/// comes from a geometric construction (k-NN) so it can be re-plotted.
struct Graph {
  int n_nodes = 0;
  Eigen::MatrixXd adjacency;                 // N x N, symmetric, zero diagonal
  std::optional<Eigen::MatrixXd> coordinates;  // N x 2

  Eigen::VectorXd degrees() const { return adjacency.rowwise().sum(); }
};

/// Validates the Graph invariants (symmetry, zero diagonal, nonnegative
/// weights, connectivity) and returns the graph. Throws precondition_error.
Graph make_graph(Eigen::MatrixXd adjacency,
                 std::optional<Eigen::MatrixXd> coordinates = std::nullopt);

/// BFS over nonzero adjacency entries from node 0; true iff all reached.
bool is_connected(const Eigen::MatrixXd& adjacency);

enum class ShiftKind {
  adjacency,
  normalized_adjacency,
  laplacian,
  normalized_laplacian,
  custom,
};

std::string to_string(ShiftKind kind);
ShiftKind shift_kind_from_string(const std::string& name);

/// Graph shift operator. Nonzero pattern respects the graph: s_kl != 0 only
/// for k == l or (k,l) an edge.
struct ShiftMatrix {
  Eigen::MatrixXd s;
  ShiftKind kind = ShiftKind::custom;

  int size() const { return static_cast<int>(s.rows()); }
};

/// Spectral radius to relative tolerance 1e-8. Shifted power iterations for
/// symmetric inputs, dense eigensolve fallback otherwise or on stagnation.
double spectral_radius(const Eigen::MatrixXd& m);

/// Derives the requested shift operator from the graph.
/// normalized-adjacency is W / (1.1 * lambda_max(W)); laplacian is D - W;
/// normalized-laplacian is D^{-1/2} (D - W) D^{-1/2}.
ShiftMatrix build_shift(const Graph& g, ShiftKind kind);

/// Symmetric standard-normal matrix, entries kept only when |v| is in
/// [1.2, 1.8], survivors shrunk toward zero by 1.1 (magnitudes end up in
/// [0.1, 0.7]), then scaled so the spectral radius is exactly 1/1.1.
/// Disconnected draws are regenerated with seed+1, at most 100 attempts.
std::pair<Graph, ShiftMatrix> gen_erdos_renyi_thresholded(int n,
                                                          std::uint64_t seed);

/// Random sensor graph: n points uniform in the unit square, symmetrized
/// k-nearest-neighbor edges, Gaussian kernel weights exp(-d^2 / 2 sigma_d^2)
/// with sigma_d the mean k-NN distance. Regenerates until connected.
Graph gen_knn_sensor(int n, int k, std::uint64_t seed);

/// Same construction on fixed coordinates (dataset graphs). Throws if the
/// resulting graph is disconnected.
Graph knn_graph_from_coordinates(const Eigen::MatrixXd& coordinates, int k);

/// One-hop neighborhoods including self, from the adjacency pattern.
std::vector<std::vector<int>> neighborhoods(const Graph& g);

/// Edge-list text format: header line "N", then "k l weight" with 1-based
/// indices, each undirected edge once.
void save_edge_list(const Graph& g, const std::string& path);
Graph load_edge_list(const std::string& path,
                     const std::string& coords_path = "");
void save_coordinates(const Graph& g, const std::string& path);

}  // namespace gdlms
