#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gdlms/filter.hpp"
#include "gdlms/graph.hpp"
#include "gdlms/rng.hpp"

namespace gdlms {

/// Second-order description of the input process: spatial covariance at lag 0
/// plus a rule for R_x(tau), tau >= 0. Negative lags follow from
/// R_x(-tau) = R_x(tau)^T.
struct SignalStatistics {
  Eigen::MatrixXd rx0;
  // R_x(tau) for tau >= 1; identity rule (temporally white) when absent.
  std::function<Eigen::MatrixXd(int)> autocorr;
  // Optional cross-correlation family R_xy(tau) = E{y(i) x^T(i - tau)}.
  std::function<Eigen::MatrixXd(int)> rxy;
  std::optional<Eigen::MatrixXd> gft;  // orthonormal V for correlated sources

  Eigen::MatrixXd rx(int tau) const;

  static SignalStatistics white(Eigen::VectorXd variances);
  static SignalStatistics white_full(Eigen::MatrixXd rx0);
  /// AR stationary statistics: R_x(tau) = S^tau R_x(0) with R_x(0) the
  /// Lyapunov solution for shift s.
  static SignalStatistics ar(const Eigen::MatrixXd& s);
};

struct NoiseModel {
  Eigen::VectorXd variances;  // per-node, all >= 0

  static NoiseModel constant(int n, double variance);
  static NoiseModel uniform(int n, double lo, double hi, CounterRng& rng);
};

/// Streaming graph-signal source; one owner per stream, reseed by rebuilding.
class SignalSource {
 public:
  virtual ~SignalSource() = default;
  virtual Eigen::VectorXd next() = 0;
  virtual int size() const = 0;
};

/// x(i) ~ N(0, diag(variances)), independent across time.
std::unique_ptr<SignalSource> iid_gaussian_source(Eigen::VectorXd variances,
                                                  std::uint64_t seed);

/// x(i) = V diag(sigma) n(i) with orthonormal V: vertex-correlated,
/// temporally white, spatial covariance V diag(sigma^2) V^T.
std::unique_ptr<SignalSource> vertex_correlated_source(
    Eigen::VectorXd sigma2, const Eigen::MatrixXd& v, std::uint64_t seed);

/// x(i) = S x(i-1) + w(i), w ~ N(0, I); initialized from the stationary
/// distribution so the stream is wide-sense stationary from step 0.
/// Passing a precomputed Lyapunov solution skips the per-stream solve.
std::unique_ptr<SignalSource> ar_time_vertex_source(
    const ShiftMatrix& s, std::uint64_t seed,
    std::optional<Eigen::MatrixXd> rx0 = std::nullopt);

/// Solves S R S^T - R + I = 0 for stable S. Direct vectorized solve for
/// N <= 80, fixed-point iteration above. Residual < 1e-10 relative.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& s);
/// The two underlying routes, exposed for cross-checking.
Eigen::MatrixXd solve_lyapunov_direct(const Eigen::MatrixXd& s);
Eigen::MatrixXd solve_lyapunov_fixed_point(const Eigen::MatrixXd& s);

/// Ground-truth observation synthesis y(i) = sum_m h_m o S^m x(i-m) + v(i)
/// (node-varying: per-node coefficient rows). The delay line is zero-primed,
/// so the first M-1 outputs are a documented transient. Shifted columns are
/// recomputed from the history each step; this is the oracle the distributed
/// regressor is tested against.
class ObservationSynthesizer {
 public:
  ObservationSynthesizer(ShiftMatrix s, FilterModel filter, NoiseModel noise,
                         std::uint64_t seed);

  /// Feeds x(i), returns y(i).
  Eigen::VectorXd step(const Eigen::VectorXd& x_new);

  void set_filter(FilterModel filter);
  const std::deque<Eigen::VectorXd>& history() const { return x_hist_; }

 private:
  ShiftMatrix s_;
  FilterModel filter_;
  NoiseModel noise_;
  CounterRng rng_;
  std::deque<Eigen::VectorXd> x_hist_;  // newest first, length M
};

/// CSV dump "i,x_1..x_N,y_1..y_N" of a synthesized stream, for external
/// validation.
void dump_stream_csv(const std::string& path, SignalSource& source,
                     ObservationSynthesizer& synth, int steps);

}  // namespace gdlms
