#include "gdlms/signal.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <fstream>

#include "gdlms/errors.hpp"
#include "gdlms/linalg.hpp"

namespace gdlms {

Eigen::MatrixXd SignalStatistics::rx(int tau) const {
  if (tau == 0) return rx0;
  if (tau < 0) return rx(-tau).transpose();
  if (!autocorr) return Eigen::MatrixXd::Zero(rx0.rows(), rx0.cols());
  return autocorr(tau);
}

SignalStatistics SignalStatistics::white(Eigen::VectorXd variances) {
  SignalStatistics st;
  st.rx0 = variances.asDiagonal();
  return st;
}

SignalStatistics SignalStatistics::white_full(Eigen::MatrixXd rx0) {
  SignalStatistics st;
  st.rx0 = std::move(rx0);
  return st;
}

SignalStatistics SignalStatistics::ar(const Eigen::MatrixXd& s) {
  SignalStatistics st;
  st.rx0 = solve_lyapunov(s);
  Eigen::MatrixXd shift = s;
  Eigen::MatrixXd rx0 = st.rx0;
  st.autocorr = [shift, rx0](int tau) {
    Eigen::MatrixXd r = rx0;
    for (int t = 0; t < tau; ++t) r = shift * r;
    return r;
  };
  return st;
}

NoiseModel NoiseModel::constant(int n, double variance) {
  if (variance < 0.0) throw precondition_error("noise variance must be >= 0");
  return {Eigen::VectorXd::Constant(n, variance)};
}

NoiseModel NoiseModel::uniform(int n, double lo, double hi, CounterRng& rng) {
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v[k] = rng.next_uniform(lo, hi);
  if (v.minCoeff() < 0.0)
    throw precondition_error("noise variance must be >= 0");
  return {v};
}

namespace {

class IidGaussianSource final : public SignalSource {
 public:
  IidGaussianSource(Eigen::VectorXd variances, std::uint64_t seed)
      : stddev_(variances.cwiseSqrt()), rng_(seed) {
    if (variances.minCoeff() <= 0.0)
      throw precondition_error("iid_gaussian_source: variances must be > 0");
  }
  int size() const override { return static_cast<int>(stddev_.size()); }
  Eigen::VectorXd next() override {
    Eigen::VectorXd x(stddev_.size());
    for (int k = 0; k < x.size(); ++k) x[k] = stddev_[k] * rng_.next_normal();
    return x;
  }

 private:
  Eigen::VectorXd stddev_;
  CounterRng rng_;
};

class VertexCorrelatedSource final : public SignalSource {
 public:
  VertexCorrelatedSource(Eigen::VectorXd sigma2, const Eigen::MatrixXd& v,
                         std::uint64_t seed)
      : rng_(seed) {
    const int n = static_cast<int>(v.rows());
    if (v.cols() != n || sigma2.size() != n)
      throw precondition_error("vertex_correlated_source: shape mismatch");
    if (!(v.transpose() * v).isApprox(Eigen::MatrixXd::Identity(n, n), 1e-10))
      throw precondition_error(
          "vertex_correlated_source: V must be orthonormal");
    mixing_ = v * sigma2.cwiseSqrt().asDiagonal();
  }
  int size() const override { return static_cast<int>(mixing_.rows()); }
  Eigen::VectorXd next() override {
    Eigen::VectorXd n(mixing_.cols());
    for (int k = 0; k < n.size(); ++k) n[k] = rng_.next_normal();
    return mixing_ * n;
  }

 private:
  Eigen::MatrixXd mixing_;
  CounterRng rng_;
};

class ArTimeVertexSource final : public SignalSource {
 public:
  ArTimeVertexSource(const ShiftMatrix& s, std::uint64_t seed,
                     std::optional<Eigen::MatrixXd> rx0)
      : s_(s.s), rng_(seed) {
    if (!rx0) {
      if (spectral_radius(s_) >= 1.0)
        throw precondition_error(
            "ar_time_vertex_source: unstable process, rho(S) >= 1");
      rx0 = solve_lyapunov(s_);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(*rx0);
    if (llt.info() != Eigen::Success)
      throw numeric_error("ar_time_vertex_source: R_x not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    Eigen::VectorXd n(s_.rows());
    for (int k = 0; k < n.size(); ++k) n[k] = rng_.next_normal();
    x_ = l * n;  // stationary start
    fresh_ = true;
  }
  int size() const override { return static_cast<int>(s_.rows()); }
  Eigen::VectorXd next() override {
    if (fresh_) {
      fresh_ = false;
      return x_;
    }
    Eigen::VectorXd w(x_.size());
    for (int k = 0; k < w.size(); ++k) w[k] = rng_.next_normal();
    x_ = s_ * x_ + w;
    return x_;
  }

 private:
  Eigen::MatrixXd s_;
  CounterRng rng_;
  Eigen::VectorXd x_;
  bool fresh_;
};

}  // namespace

std::unique_ptr<SignalSource> iid_gaussian_source(Eigen::VectorXd variances,
                                                  std::uint64_t seed) {
  return std::make_unique<IidGaussianSource>(std::move(variances), seed);
}

std::unique_ptr<SignalSource> vertex_correlated_source(
    Eigen::VectorXd sigma2, const Eigen::MatrixXd& v, std::uint64_t seed) {
  return std::make_unique<VertexCorrelatedSource>(std::move(sigma2), v, seed);
}

std::unique_ptr<SignalSource> ar_time_vertex_source(
    const ShiftMatrix& s, std::uint64_t seed,
    std::optional<Eigen::MatrixXd> rx0) {
  return std::make_unique<ArTimeVertexSource>(s, seed, std::move(rx0));
}

namespace {

void check_stable_square(const Eigen::MatrixXd& s) {
  if (s.cols() != s.rows())
    throw precondition_error("solve_lyapunov: square input");
  if (spectral_radius(s) >= 1.0)
    throw precondition_error("solve_lyapunov: rho(S) must be < 1");
}

Eigen::MatrixXd check_residual(const Eigen::MatrixXd& s, Eigen::MatrixXd r) {
  const int n = static_cast<int>(s.rows());
  const double residual =
      (s * r * s.transpose() - r + Eigen::MatrixXd::Identity(n, n)).norm() /
      r.norm();
  if (residual >= 1e-10)
    throw numeric_error("solve_lyapunov: residual " +
                        std::to_string(residual) + " exceeds 1e-10");
  return r;
}

}  // namespace

Eigen::MatrixXd solve_lyapunov_direct(const Eigen::MatrixXd& s) {
  check_stable_square(s);
  const int n = static_cast<int>(s.rows());
  // vec form: (I - S (x) S) vec(R) = vec(I)
  const int n2 = n * n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n2, n2) - kron(s, s);
  Eigen::VectorXd rhs = Eigen::MatrixXd::Identity(n, n).reshaped();
  Eigen::VectorXd vec = a.partialPivLu().solve(rhs);
  return check_residual(s, vec.reshaped(n, n));
}

Eigen::MatrixXd solve_lyapunov_fixed_point(const Eigen::MatrixXd& s) {
  check_stable_square(s);
  const int n = static_cast<int>(s.rows());
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
  bool done = false;
  for (int it = 0; it < 100000; ++it) {
    Eigen::MatrixXd next = s * r * s.transpose();
    next += Eigen::MatrixXd::Identity(n, n);
    // next - r is exactly the residual S R S^T - R + I
    const double residual = (next - r).norm();
    r = std::move(next);
    if (residual < 1e-11 * r.norm()) {
      done = true;
      break;
    }
  }
  if (!done)
    throw numeric_error("solve_lyapunov: fixed point did not converge");
  return check_residual(s, std::move(r));
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& s) {
  return s.rows() <= 80 ? solve_lyapunov_direct(s)
                        : solve_lyapunov_fixed_point(s);
}

ObservationSynthesizer::ObservationSynthesizer(ShiftMatrix s,
                                               FilterModel filter,
                                               NoiseModel noise,
                                               std::uint64_t seed)
    : s_(std::move(s)), filter_(std::move(filter)), noise_(std::move(noise)),
      rng_(seed) {
  const int n = s_.size();
  if (noise_.variances.size() != n)
    throw precondition_error("ObservationSynthesizer: noise size mismatch");
  for (int m = 0; m < filter_.order(); ++m)
    x_hist_.emplace_back(Eigen::VectorXd::Zero(n));
}

void ObservationSynthesizer::set_filter(FilterModel filter) {
  if (filter.order() != filter_.order())
    throw precondition_error("set_filter: order mismatch with history length");
  filter_ = std::move(filter);
}

Eigen::VectorXd ObservationSynthesizer::step(const Eigen::VectorXd& x_new) {
  const int n = s_.size();
  if (x_new.size() != n)
    throw precondition_error("ObservationSynthesizer: x size mismatch");
  x_hist_.push_front(x_new);
  x_hist_.pop_back();

  const Eigen::MatrixXd bank = filter_.bank(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int m = 0; m < filter_.order(); ++m) {
    Eigen::VectorXd shifted = x_hist_[m];  // S^m x(i-m), m multiplications
    for (int hop = 0; hop < m; ++hop) shifted = s_.s * shifted;
    y += bank.col(m).cwiseProduct(shifted);
  }
  for (int k = 0; k < n; ++k)
    if (noise_.variances[k] > 0.0)
      y[k] += std::sqrt(noise_.variances[k]) * rng_.next_normal();
  return y;
}

void dump_stream_csv(const std::string& path, SignalSource& source,
                     ObservationSynthesizer& synth, int steps) {
  std::ofstream f(path);
  if (!f) throw config_error("cannot open for writing: " + path);
  f.precision(12);
  const int n = source.size();
  f << "i";
  for (int k = 1; k <= n; ++k) f << ",x_" << k;
  for (int k = 1; k <= n; ++k) f << ",y_" << k;
  f << "\n";
  for (int i = 0; i < steps; ++i) {
    const Eigen::VectorXd x = source.next();
    const Eigen::VectorXd y = synth.step(x);
    f << i;
    for (int k = 0; k < n; ++k) f << "," << x[k];
    for (int k = 0; k < n; ++k) f << "," << y[k];
    f << "\n";
  }
}

}  // namespace gdlms
