#include "gdlms/graph.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gdlms/errors.hpp"
#include "gdlms/rng.hpp"

namespace gdlms {

bool is_connected(const Eigen::MatrixXd& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  int reached = 1;
  while (!queue.empty()) {
    const int k = queue.back();
    queue.pop_back();
    for (int l = 0; l < n; ++l) {
      if (!seen[l] && adjacency(k, l) != 0.0) {
        seen[l] = 1;
        ++reached;
        queue.push_back(l);
      }
    }
  }
  return reached == n;
}

Graph make_graph(Eigen::MatrixXd adjacency,
                 std::optional<Eigen::MatrixXd> coordinates) {
  const int n = static_cast<int>(adjacency.rows());
  if (n < 1 || adjacency.cols() != n)
    throw precondition_error("adjacency must be square and nonempty");
  if (!adjacency.isApprox(adjacency.transpose(), 1e-12))
    throw precondition_error("adjacency must be symmetric");
  if (adjacency.diagonal().cwiseAbs().maxCoeff() != 0.0)
    throw precondition_error("adjacency diagonal must be zero");
  if (adjacency.minCoeff() < 0.0)
    throw precondition_error("adjacency weights must be nonnegative");
  if (!is_connected(adjacency))
    throw precondition_error("graph must be connected");
  if (coordinates && (coordinates->rows() != n || coordinates->cols() != 2))
    throw precondition_error("coordinates must be N x 2");
  Graph g;
  g.n_nodes = n;
  g.adjacency = std::move(adjacency);
  g.coordinates = std::move(coordinates);
  return g;
}

std::string to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::adjacency: return "adjacency";
    case ShiftKind::normalized_adjacency: return "normalized_adjacency";
    case ShiftKind::laplacian: return "laplacian";
    case ShiftKind::normalized_laplacian: return "normalized_laplacian";
    case ShiftKind::custom: return "custom";
  }
  return "custom";
}

ShiftKind shift_kind_from_string(const std::string& name) {
  if (name == "adjacency") return ShiftKind::adjacency;
  if (name == "normalized_adjacency") return ShiftKind::normalized_adjacency;
  if (name == "laplacian") return ShiftKind::laplacian;
  if (name == "normalized_laplacian") return ShiftKind::normalized_laplacian;
  if (name == "custom") return ShiftKind::custom;
  throw config_error("unknown shift kind: " + name);
}

namespace {

// Power iteration on a symmetric matrix shifted to make the wanted extreme
// eigenvalue dominant and nonnegative. Returns the extreme eigenvalue of m.
double shifted_power_extreme(const Eigen::MatrixXd& m, double shift,
                             bool* converged) {
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd v(n);
  CounterRng rng(0x5eed5eedULL);
  for (int i = 0; i < n; ++i) v[i] = rng.next_normal();
  v.normalize();
  double lambda = 0.0;
  const int max_iters = 20000;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd w = m * v + shift * v;
    const double norm = w.norm();
    if (norm == 0.0) {  // v in the null space of the shifted matrix
      *converged = true;
      return -shift;
    }
    w /= norm;
    const double next = w.dot(m * w);  // Rayleigh quotient of m itself
    if (it > 0 && std::abs(next - lambda) <=
                      5e-14 * std::max(1.0, std::abs(next))) {
      *converged = true;
      return next;
    }
    lambda = next;
    v = w;
  }
  *converged = false;
  return lambda;
}

}  // namespace

double spectral_radius(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 0 || m.cols() != n)
    throw precondition_error("spectral_radius: matrix must be square");
  if (!m.allFinite())
    throw precondition_error("spectral_radius: entries must be finite");
  if (n == 1) return std::abs(m(0, 0));

  if (m.isApprox(m.transpose(), 1e-12)) {
    // Shift by the infinity norm so both extreme eigenvalues become dominant
    // in turn; power iteration then converges without +/- pair oscillation.
    const double c = m.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
    bool ok_hi = false;
    bool ok_lo = false;
    const double hi = shifted_power_extreme(m, c, &ok_hi);
    const double lo = shifted_power_extreme(m, -c, &ok_lo);
    if (ok_hi && ok_lo) return std::max(std::abs(hi), std::abs(lo));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m,
                                                      Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw numeric_error(
          "spectral_radius: power iteration stalled (last estimates " +
          std::to_string(hi) + ", " + std::to_string(lo) +
          ") and dense eigensolve failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }

  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw numeric_error("spectral_radius: dense eigensolve failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

ShiftMatrix build_shift(const Graph& g, ShiftKind kind) {
  const Eigen::MatrixXd& w = g.adjacency;
  const Eigen::VectorXd deg = g.degrees();
  if (kind == ShiftKind::normalized_adjacency ||
      kind == ShiftKind::normalized_laplacian) {
    if (deg.minCoeff() <= 0.0)
      throw precondition_error(
          "normalized shift kinds require all node degrees > 0");
  }
  ShiftMatrix out;
  out.kind = kind;
  switch (kind) {
    case ShiftKind::adjacency:
      out.s = w;
      break;
    case ShiftKind::normalized_adjacency:
      out.s = w / (1.1 * spectral_radius(w));
      break;
    case ShiftKind::laplacian:
      out.s = Eigen::MatrixXd(deg.asDiagonal()) - w;
      break;
    case ShiftKind::normalized_laplacian: {
      const Eigen::VectorXd dinvsqrt = deg.cwiseSqrt().cwiseInverse();
      const Eigen::MatrixXd lap = Eigen::MatrixXd(deg.asDiagonal()) - w;
      out.s = dinvsqrt.asDiagonal() * lap * dinvsqrt.asDiagonal();
      break;
    }
    case ShiftKind::custom:
      throw precondition_error("build_shift: custom kind has no construction");
  }
  return out;
}

std::pair<Graph, ShiftMatrix> gen_erdos_renyi_thresholded(int n,
                                                          std::uint64_t seed) {
  if (n < 2) throw precondition_error("gen_erdos_renyi_thresholded: n >= 2");
  for (int attempt = 0; attempt < 100; ++attempt) {
    CounterRng rng(seed + static_cast<std::uint64_t>(attempt));
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double draw = rng.next_normal();
        const double mag = std::abs(draw);
        if (mag >= 1.2 && mag <= 1.8) {
          // Soft threshold by 1.1: magnitude lands in [0.1, 0.7].
          const double shrunk = (mag - 1.1) * (draw < 0.0 ? -1.0 : 1.0);
          v(i, j) = shrunk;
          v(j, i) = shrunk;
        }
      }
    if (!is_connected(v.cwiseAbs())) {
      std::cerr << "gen_erdos_renyi_thresholded: seed "
                << seed + static_cast<std::uint64_t>(attempt)
                << " gave a disconnected graph, regenerating with seed+1\n";
      continue;
    }
    Graph g = make_graph(v.cwiseAbs());
    ShiftMatrix s;
    s.kind = ShiftKind::custom;
    s.s = v / (1.1 * spectral_radius(v));
    return {std::move(g), std::move(s)};
  }
  throw numeric_error(
      "gen_erdos_renyi_thresholded: no connected draw in 100 attempts");
}

namespace {

Graph knn_build(const Eigen::MatrixXd& coords, int k) {
  const int n = static_cast<int>(coords.rows());
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      dist(i, j) = (coords.row(i) - coords.row(j)).norm();

  // Directed k-NN selection, then union-symmetrize.
  Eigen::MatrixXd pattern = Eigen::MatrixXd::Zero(n, n);
  double knn_dist_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<int> order(n);
    for (int j = 0; j < n; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
      return a < b;
    });
    int taken = 0;
    for (int j : order) {
      if (j == i) continue;
      pattern(i, j) = 1.0;
      knn_dist_sum += dist(i, j);
      if (++taken == k) break;
    }
  }
  // Wide kernel: weights stay close to one inside the neighbor radius, so
  // row energies of the normalized shift do not collapse at weakly placed
  // nodes (those rows drive the explained-variance truncation).
  const double sigma_d = 3.0 * knn_dist_sum / (static_cast<double>(n) * k);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && (pattern(i, j) != 0.0 || pattern(j, i) != 0.0))
        w(i, j) = std::exp(-dist(i, j) * dist(i, j) /
                           (2.0 * sigma_d * sigma_d));
  return make_graph(std::move(w), coords);
}

bool has_duplicate_rows(const Eigen::MatrixXd& coords) {
  const int n = static_cast<int>(coords.rows());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((coords.row(i) - coords.row(j)).norm() == 0.0) return true;
  return false;
}

}  // namespace

Graph gen_knn_sensor(int n, int k, std::uint64_t seed) {
  if (!(n > k && k >= 1))
    throw precondition_error("gen_knn_sensor: need n > k >= 1");
  for (int attempt = 0; attempt < 100; ++attempt) {
    CounterRng rng(seed + static_cast<std::uint64_t>(attempt));
    Eigen::MatrixXd coords(n, 2);
    for (int i = 0; i < n; ++i) {
      coords(i, 0) = rng.next_double();
      coords(i, 1) = rng.next_double();
    }
    while (has_duplicate_rows(coords)) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < 2; ++j)
          coords(i, j) += 1e-9 * (rng.next_double() - 0.5);
    }
    // Labeling convention: nodes are numbered in planar (x, y) order, so
    // index ranges correspond to spatial regions (cluster scenarios assign
    // tasks by index range).
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (coords(a, 0) != coords(b, 0)) return coords(a, 0) < coords(b, 0);
      return coords(a, 1) < coords(b, 1);
    });
    Eigen::MatrixXd sorted(n, 2);
    for (int i = 0; i < n; ++i) sorted.row(i) = coords.row(order[i]);
    try {
      return knn_build(sorted, k);
    } catch (const precondition_error&) {
      std::cerr << "gen_knn_sensor: seed "
                << seed + static_cast<std::uint64_t>(attempt)
                << " gave a disconnected graph, regenerating with seed+1\n";
    }
  }
  throw numeric_error("gen_knn_sensor: no connected draw in 100 attempts");
}

Graph knn_graph_from_coordinates(const Eigen::MatrixXd& coordinates, int k) {
  if (coordinates.rows() <= k || k < 1)
    throw precondition_error("knn_graph_from_coordinates: need n > k >= 1");
  return knn_build(coordinates, k);
}

std::vector<std::vector<int>> neighborhoods(const Graph& g) {
  std::vector<std::vector<int>> out(g.n_nodes);
  for (int k = 0; k < g.n_nodes; ++k) {
    out[k].push_back(k);
    for (int l = 0; l < g.n_nodes; ++l)
      if (l != k && g.adjacency(k, l) != 0.0) out[k].push_back(l);
  }
  return out;
}

void save_edge_list(const Graph& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw config_error("cannot open for writing: " + path);
  f << g.n_nodes << "\n";
  f.precision(17);
  for (int k = 0; k < g.n_nodes; ++k)
    for (int l = k + 1; l < g.n_nodes; ++l)
      if (g.adjacency(k, l) != 0.0)
        f << k + 1 << " " << l + 1 << " " << g.adjacency(k, l) << "\n";
}

void save_coordinates(const Graph& g, const std::string& path) {
  if (!g.coordinates)
    throw precondition_error("save_coordinates: graph has no coordinates");
  std::ofstream f(path);
  if (!f) throw config_error("cannot open for writing: " + path);
  f.precision(17);
  for (int k = 0; k < g.n_nodes; ++k)
    f << k + 1 << " " << (*g.coordinates)(k, 0) << " "
      << (*g.coordinates)(k, 1) << "\n";
}

Graph load_edge_list(const std::string& path, const std::string& coords_path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot open graph file: " + path);
  int n = 0;
  if (!(f >> n) || n < 1)
    throw config_error("bad edge-list header in " + path);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  int k, l;
  double weight;
  while (f >> k >> l >> weight) {
    if (k < 1 || k > n || l < 1 || l > n)
      throw config_error("edge index out of range in " + path);
    w(k - 1, l - 1) = weight;
    w(l - 1, k - 1) = weight;
  }
  std::optional<Eigen::MatrixXd> coords;
  if (!coords_path.empty()) {
    std::ifstream cf(coords_path);
    if (!cf) throw config_error("cannot open coordinates file: " + coords_path);
    Eigen::MatrixXd c(n, 2);
    int idx;
    double x, y;
    int count = 0;
    while (cf >> idx >> x >> y) {
      if (idx < 1 || idx > n)
        throw config_error("coordinate index out of range in " + coords_path);
      c(idx - 1, 0) = x;
      c(idx - 1, 1) = y;
      ++count;
    }
    if (count != n)
      throw config_error("coordinates file has " + std::to_string(count) +
                         " rows, graph has " + std::to_string(n) + " nodes");
    coords = std::move(c);
  }
  return make_graph(std::move(w), std::move(coords));
}

}  // namespace gdlms
