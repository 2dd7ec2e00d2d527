// Acceptance suite: one criterion per function, one PASS/FAIL line each.
// Run with no arguments for the full list, or pass criterion numbers.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gdlms/dataset.hpp"
#include "gdlms/harness.hpp"
#include "gdlms/linalg.hpp"
#include "gdlms/regressor.hpp"
#include "gdlms/rng.hpp"
#include "gdlms/theory.hpp"

using namespace gdlms;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

Outcome regressor_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::uint64_t seed = 100 + inst;
    ShiftMatrix s;
    if (inst % 2 == 0) {
      auto [g, shift] = gen_erdos_renyi_thresholded(8 + inst, seed);
      s = shift;
    } else {
      const Graph g = gen_knn_sensor(10 + inst, 3, seed);
      const ShiftKind kinds[] = {ShiftKind::adjacency,
                                 ShiftKind::normalized_adjacency,
                                 ShiftKind::laplacian,
                                 ShiftKind::normalized_laplacian};
      s = build_shift(g, kinds[inst % 4]);
    }
    const int order = 1 + inst % 8;
    const int n = s.size();
    RegressorNetwork reg(s, order);
    std::vector<Eigen::VectorXd> history(order, Eigen::VectorXd::Zero(n));
    CounterRng rng(seed);
    for (int i = 0; i < 200; ++i) {
      Eigen::VectorXd x(n);
      for (int k = 0; k < n; ++k) x[k] = rng.next_normal();
      history.insert(history.begin(), x);
      history.pop_back();
      reg.step(x);
      if (i < order - 1) continue;
      const Eigen::MatrixXd z = centralized_regressor(s, history);
      worst = std::max(worst, (reg.rows() - z).cwiseAbs().maxCoeff());
    }
  }
  const double secs = seconds_since(t0);
  Outcome out;
  out.pass = worst < 1e-12 && secs < 10.0;
  out.detail = fmt("max |distributed - centralized| = %.3g (tol 1e-12), "
                   "%.2f s (limit 10 s)", worst, secs);
  return out;
}

// ---------------------------------------------------------------- criterion 2

TheoryModel acceptance_model(int n, int order, double mu, std::uint64_t seed,
                             bool plms) {
  const Graph g = gen_knn_sensor(n, 2, seed);
  const ShiftMatrix s = build_shift(g, ShiftKind::normalized_adjacency);
  CounterRng rng(seed);
  Eigen::VectorXd var(n), noise(n), h0(n * order);
  for (int k = 0; k < n; ++k) {
    var[k] = rng.next_uniform(1.0, 1.5);
    noise[k] = rng.next_uniform(0.1, 0.15);
  }
  for (int i = 0; i < n * order; ++i) h0[i] = rng.next_double();
  std::vector<Eigen::MatrixXd> d_blocks;
  if (plms) {
    const Eigen::MatrixXd p = compute_preconditioner(s, order);
    for (int k = 0; k < n; ++k)
      d_blocks.push_back(
          Eigen::MatrixXd(d_matrix(p.row(k).transpose(), 0.01).asDiagonal()));
  }
  return build_theory_model(s, build_combination_matrix(neighborhoods(g)),
                            Eigen::VectorXd::Constant(n, mu), d_blocks,
                            SignalStatistics::white(var), NoiseModel{noise},
                            h0, order);
}

Outcome theory_self_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_fb = 0.0, worst_ss = 0.0, worst_limit = 0.0;
  for (int which = 0; which < 2; ++which) {
    const TheoryModel tm = which == 0 ? acceptance_model(6, 3, 0.04, 21, false)
                                      : acceptance_model(5, 2, 0.05, 22, true);
    const auto zf = transient_msd_F(tm, 400);
    const auto zb = transient_msd_B(tm, 400);
    for (std::size_t i = 0; i < zf.size(); ++i)
      worst_fb = std::max(worst_fb, std::abs(zf[i] - zb[i]));
    const double ss_f = steady_state_msd(tm, SteadyStateForm::F);
    const double ss_s = steady_state_msd(tm, SteadyStateForm::series);
    worst_ss = std::max(worst_ss, std::abs(ss_f - ss_s) / std::abs(ss_f));
    const double rho = mean_stability(tm).rho;
    const int imax =
        static_cast<int>(std::ceil(std::log(1e-8) / std::log(rho))) + 1;
    const auto tail = transient_msd_B(tm, imax);
    worst_limit = std::max(worst_limit, std::abs(tail.back() - ss_s));
  }
  const double secs = seconds_since(t0);
  Outcome out;
  out.pass = worst_fb < 1e-10 && worst_ss < 1e-8 && worst_limit < 1e-6 &&
             secs < 30.0;
  out.detail = fmt("F vs B %.2g (1e-10), steady F vs series %.2g rel (1e-8), "
                   "transient limit %.2g (1e-6), %.2f s (limit 30 s)",
                   worst_fb, worst_ss, worst_limit, secs);
  return out;
}

// ---------------------------------------------------------------- criterion 3

Outcome scalar_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  ShiftMatrix s;
  s.kind = ShiftKind::custom;
  s.s = Eigen::MatrixXd::Zero(1, 1);
  Eigen::VectorXd h0(1);
  h0 << 1.0;
  const TheoryModel tm = build_theory_model(
      s, Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Constant(1, 0.1),
      {}, SignalStatistics::white(Eigen::VectorXd::Ones(1)),
      NoiseModel{Eigen::VectorXd::Constant(1, 0.1)}, h0, 1);
  // Small-step-size model: zeta* = mu^2 sigma_v^2 lambda / (1 - (1-mu lambda)^2).
  const double expected_theory = 1e-3 / 0.19;
  // Exact scalar oracle: h~(i+1) = (1 - mu z^2) h~(i) - mu z v with Gaussian
  // z gives E(1 - mu z^2)^2 = 1 - 2 mu lambda + 3 mu^2 lambda^2, hence
  // zeta* = mu sigma_v^2 / (2 - 3 mu lambda). The dropped fourth-moment term
  // contributes 11.8% at mu lambda = 0.1.
  const double expected_exact = 1e-2 / 1.7;
  const double zeta_f = steady_state_msd(tm, SteadyStateForm::F);

  Graph g;
  g.n_nodes = 1;
  g.adjacency = Eigen::MatrixXd::Zero(1, 1);
  TruthStage stage;
  stage.start_iter = 0;
  stage.bank = Eigen::MatrixXd::Constant(1, 1, 1.0);
  stage.cluster_of.assign(1, 0);
  SimConfig sim;
  sim.algorithm = AlgorithmKind::lms;
  sim.mu = Eigen::VectorXd::Constant(1, 0.1);
  sim.combine = CombineMode::identity;
  sim.iters = 1500;
  sim.stages = {stage};
  const McResult mc = run_monte_carlo(
      g, s, sim, SourceSpec::iid(Eigen::VectorXd::Ones(1)),
      Eigen::VectorXd::Constant(1, 0.1), 5000, 303);
  const double sim_ss = mc.msd.tail(400).mean();
  const double secs = seconds_since(t0);

  Outcome out;
  out.pass = std::abs(zeta_f - expected_theory) < 1e-12 * expected_theory &&
             std::abs(sim_ss - expected_exact) < 0.10 * expected_exact &&
             secs < 30.0;
  out.detail = fmt("theory %.8g vs 1e-3/0.19 = %.8g; sim %.4g vs exact "
                   "closed form 1e-2/1.7 = %.4g (%.2f%% off, tol 10%%), "
                   "%.1f s (limit 30 s)",
                   zeta_f, expected_theory, sim_ss, expected_exact,
                   100.0 * std::abs(sim_ss - expected_exact) / expected_exact,
                   secs);
  return out;
}

// ---------------------------------------------------------------- criterion 4

Outcome theory_vs_simulation() {
  const auto t0 = std::chrono::steady_clock::now();
  auto [g, s] = gen_erdos_renyi_thresholded(20, 404);
  const int n = 20, order = 3, runs = 1000, iters = 1500;
  CounterRng setup(404);
  Eigen::VectorXd var(n), noise(n);
  for (int k = 0; k < n; ++k) {
    var[k] = setup.next_uniform(1.0, 1.5);
    noise[k] = setup.next_uniform(0.1, 0.15);
  }
  Eigen::VectorXd h(order);
  for (int m = 0; m < order; ++m) h[m] = setup.next_double();

  const Eigen::MatrixXd p = compute_preconditioner(s, order);
  const double eps = 0.01;
  const double mu = 0.01;

  TruthStage stage;
  stage.start_iter = 0;
  stage.bank = h.transpose().replicate(n, 1);
  stage.cluster_of.assign(n, 0);
  SimConfig sim;
  sim.algorithm = AlgorithmKind::plms;
  sim.mu = Eigen::VectorXd::Constant(n, mu);
  sim.epsilon = eps;
  sim.combine = CombineMode::uniform;
  sim.iters = iters;
  sim.stages = {stage};
  const McResult mc = run_monte_carlo(g, s, sim, SourceSpec::iid(var), noise,
                                      runs, 505);

  std::vector<Eigen::MatrixXd> d_blocks;
  for (int k = 0; k < n; ++k)
    d_blocks.push_back(
        Eigen::MatrixXd(d_matrix(p.row(k).transpose(), eps).asDiagonal()));
  Eigen::VectorXd h0(n * order);
  for (int k = 0; k < n; ++k) h0.segment(k * order, order) = h;
  const TheoryModel tm = build_theory_model(
      s, build_combination_matrix(neighborhoods(g)),
      Eigen::VectorXd::Constant(n, mu), d_blocks, SignalStatistics::white(var),
      NoiseModel{noise}, h0, order);
  const auto zeta = transient_msd_B(tm, iters);
  const double ss_theory = steady_state_msd(tm, SteadyStateForm::series);

  const double ss_sim = mc.msd.tail(300).mean();
  const double steady_gap = std::abs(db10(ss_sim) - db10(ss_theory));
  double transient_gap = 0.0;
  for (int i = 10; i <= iters; ++i)
    transient_gap =
        std::max(transient_gap, std::abs(db10(mc.msd[i]) - db10(zeta[i])));
  const double secs = seconds_since(t0);

  Outcome out;
  out.pass = steady_gap < 1.0 && transient_gap < 1.5 && secs < 300.0;
  out.detail = fmt("steady-state gap %.3f dB (limit 1), transient gap %.3f dB "
                   "(limit 1.5 after i=10), %.0f s (limit 300 s)",
                   steady_gap, transient_gap, secs);
  return out;
}

// ---------------------------------------------------------------- criterion 5

struct OrderingContext {
  Graph g;
  ShiftMatrix s;
  Eigen::VectorXd var, noise;
  Eigen::VectorXd h;
  int order = 5;
  int iters = 4000;
  TruthStage stage;
};

SimConfig ordering_sim(const OrderingContext& ctx, AlgorithmKind alg,
                       double mu) {
  SimConfig sim;
  sim.algorithm = alg;
  sim.mu = Eigen::VectorXd::Constant(ctx.g.n_nodes, mu);
  sim.epsilon = 0.01;
  sim.combine = CombineMode::uniform;
  sim.iters = ctx.iters;
  sim.stages = {ctx.stage};
  return sim;
}

double ordering_tail_db(const OrderingContext& ctx, AlgorithmKind alg,
                        double mu, int runs, std::uint64_t seed) {
  const SimConfig sim = ordering_sim(ctx, alg, mu);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(ctx.iters + 1);
  int ok = 0;
  for (int r = 0; r < runs; ++r) {
    const SimOutputs res = simulate_run(ctx.g, ctx.s, sim,
                                        SourceSpec::iid(ctx.var), ctx.noise,
                                        derive_seed(seed, r));
    if (res.diverged) return 40.0;  // treat as way above any target
    acc += res.msd;
    ++ok;
  }
  return db10(acc.tail(600).mean() / ok);
}

Outcome convergence_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  OrderingContext ctx;
  ctx.g = gen_knn_sensor(60, 5, 550);
  ctx.s = build_shift(ctx.g, ShiftKind::normalized_adjacency);
  const int n = 60;
  CounterRng setup(551);
  ctx.var.resize(n);
  ctx.noise.resize(n);
  for (int k = 0; k < n; ++k) {
    ctx.var[k] = setup.next_uniform(1.0, 1.5);
    ctx.noise[k] = setup.next_uniform(0.1, 0.15);
  }
  ctx.h.resize(ctx.order);
  for (int m = 0; m < ctx.order; ++m) ctx.h[m] = setup.next_double();
  ctx.stage.start_iter = 0;
  ctx.stage.bank = ctx.h.transpose().replicate(n, 1);
  ctx.stage.cluster_of.assign(n, 0);

  const double target_db = -24.0;
  const int calib_runs = 16;
  const AlgorithmKind algs[] = {AlgorithmKind::lms, AlgorithmKind::plms,
                                AlgorithmKind::lmsn, AlgorithmKind::nlms};
  double mu_of[4];
  for (int a = 0; a < 4; ++a) {
    // The tail-MSD/step-size relation is U-shaped (too-small steps have not
    // converged by the horizon): locate the valley on a coarse grid, then
    // bisect the ascending branch to its right.
    std::vector<double> grid, tails;
    for (double mu = 1e-4; mu < 2.0; mu *= 4.0) {
      grid.push_back(mu);
      tails.push_back(ordering_tail_db(ctx, algs[a], mu, calib_runs, 600 + a));
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < grid.size(); ++j)
      if (tails[j] < tails[best]) best = j;
    std::size_t above = best;
    while (above < grid.size() && tails[above] < target_db) ++above;
    if (tails[best] >= target_db || above == grid.size()) {
      Outcome out;
      out.detail = fmt("calibration failed for %s (valley %.1f dB)",
                       to_string(algs[a]).c_str(), tails[best]);
      return out;
    }
    double lo = grid[above - 1], hi = grid[above];
    double mu = std::sqrt(lo * hi);
    for (int it = 0; it < 10; ++it) {
      mu = std::sqrt(lo * hi);
      const double db = ordering_tail_db(ctx, algs[a], mu, calib_runs, 600 + a);
      if (std::abs(db - target_db) < 0.08) break;
      if (db > target_db)
        hi = mu;
      else
        lo = mu;
    }
    mu_of[a] = mu;
  }

  // 100 seeded trials per algorithm with the tuned step-sizes.
  const int trials = 100;
  std::vector<std::vector<int>> crossing(4, std::vector<int>(trials));
  std::vector<double> tail_mean(4, 0.0);
  for (int a = 0; a < 4; ++a) {
    const SimConfig sim = ordering_sim(ctx, algs[a], mu_of[a]);
    for (int trial = 0; trial < trials; ++trial) {
      const SimOutputs res = simulate_run(ctx.g, ctx.s, sim,
                                          SourceSpec::iid(ctx.var), ctx.noise,
                                          derive_seed(777, trial));
      int cross = ctx.iters + 1;
      for (int i = 0; i <= ctx.iters; ++i)
        if (db10(res.msd[i]) <= -20.0) {
          cross = i;
          break;
        }
      crossing[a][trial] = cross;
      tail_mean[a] += res.msd.tail(600).mean() / trials;
    }
  }

  double worst_gap = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      worst_gap = std::max(
          worst_gap, std::abs(db10(tail_mean[a]) - db10(tail_mean[b])));

  int ok = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const int lms = crossing[0][trial], plms = crossing[1][trial],
              lmsn = crossing[2][trial], nlms = crossing[3][trial];
    const bool faster = plms < lms && lmsn < lms;
    const bool nlms_slowest = nlms > lms && nlms > plms && nlms > lmsn;
    if (faster && nlms_slowest) ++ok;
  }
  const double secs = seconds_since(t0);

  Outcome out;
  out.pass = worst_gap <= 0.5 && ok >= 90 && secs < 300.0;
  out.detail = fmt("tuned mu = {%.4g, %.4g, %.4g, %.4g}, steady spread "
                   "%.2f dB (limit 0.5), ordering held in %d/100 trials "
                   "(need 90), %.0f s (limit 300 s)",
                   mu_of[0], mu_of[1], mu_of[2], mu_of[3], worst_gap, ok,
                   secs);
  return out;
}

// ---------------------------------------------------------------- criterion 6

Outcome preconditioner_exactness() {
  auto [g, s] = gen_erdos_renyi_thresholded(30, 606);
  const int order = 5;
  const double sigma2 = 1.3;
  const SignalStatistics stats =
      SignalStatistics::white(Eigen::VectorXd::Constant(30, sigma2));
  const Eigen::MatrixXd p = compute_preconditioner(s, order);
  double worst = 0.0;
  for (int k = 0; k < 30; ++k) {
    const Eigen::MatrixXd r = local_covariance(s, stats, k, order);
    const Eigen::MatrixXd target =
        sigma2 * Eigen::MatrixXd(p.row(k).transpose().asDiagonal());
    worst = std::max(worst, (r - target).cwiseAbs().maxCoeff());
  }

  // Equalized modes at eps = 0: tau = 1/(2 mu d_m lambda_m) with
  // lambda_m = sigma^2 p_m and d_m = 1/p_m.
  double tc_spread = 0.0;
  for (int k = 0; k < 30; ++k) {
    const Eigen::VectorXd pk = p.row(k).transpose();
    const Eigen::VectorXd eigs = sigma2 * pk;
    const Eigen::VectorXd d = d_matrix(pk, 0.0);
    const auto tc = time_constants(0.01, eigs, d);
    for (std::size_t m = 1; m < tc.size(); ++m)
      tc_spread = std::max(
          tc_spread, std::abs(tc[m].preconditioned - tc[0].preconditioned) /
                         tc[0].preconditioned);
  }

  Outcome out;
  out.pass = worst < 1e-10 && tc_spread < 1e-12;
  out.detail = fmt("max |R_zk - sigma^2 P_k| = %.2g (tol 1e-10), "
                   "preconditioned time-constant spread %.2g",
                   worst, tc_spread);
  return out;
}

// ---------------------------------------------------------------- criterion 7

Eigen::VectorXd averaged_msd(const Experiment& ex, const SimConfig& sim,
                             int runs, std::uint64_t seed) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(sim.iters + 1);
  for (int r = 0; r < runs; ++r)
    acc += simulate_run(ex.graph, ex.shift, sim, ex.source,
                        ex.noise_variances, derive_seed(seed, r))
               .msd;
  return acc / runs;
}

const MaterializedVariant& find_variant(const Experiment& ex,
                                        const std::string& label) {
  for (const auto& v : ex.variants)
    if (v.label == label) return v;
  throw std::runtime_error("missing variant " + label);
}

Outcome clustering_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const Experiment ex = materialize(preset("fig5"));
  const std::vector<int>& truth = ex.stages.front().cluster_of;
  const auto nbrs = neighborhoods(ex.graph);
  const int runs = 100;

  const SimConfig& clustered = find_variant(ex, "clustered").sim;
  int exact = 0;
  Eigen::VectorXd msd_clustered = Eigen::VectorXd::Zero(clustered.iters + 1);
  for (int r = 0; r < runs; ++r) {
    const SimOutputs res =
        simulate_run(ex.graph, ex.shift, clustered, ex.source,
                     ex.noise_variances, derive_seed(ex.master_seed, r));
    msd_clustered += res.msd;
    bool match = true;
    for (int k = 0; k < ex.graph.n_nodes && match; ++k)
      for (int l : nbrs[k]) {
        const bool same = truth[l] == truth[k];
        if ((res.final_e(l, k) != 0) != same) {
          match = false;
          break;
        }
      }
    exact += match;
  }
  msd_clustered /= runs;

  const Eigen::VectorXd msd_oracle =
      averaged_msd(ex, find_variant(ex, "oracle").sim, runs, ex.master_seed);
  const Eigen::VectorXd msd_global =
      averaged_msd(ex, find_variant(ex, "global").sim, runs, ex.master_seed);
  const Eigen::VectorXd msd_noncoop =
      averaged_msd(ex, find_variant(ex, "noncoop").sim, runs, ex.master_seed);

  const auto tail = [](const Eigen::VectorXd& m) {
    return db10(m.tail(250).mean());
  };
  const double learned_db = tail(msd_clustered);
  const double oracle_db = tail(msd_oracle);
  const double global_db = tail(msd_global);
  const double noncoop_db = tail(msd_noncoop);
  const double secs = seconds_since(t0);

  Outcome out;
  out.pass = exact >= 95 && std::abs(learned_db - oracle_db) <= 2.0 &&
             global_db >= learned_db + 5.0 && noncoop_db >= learned_db + 5.0 &&
             secs < 600.0;
  out.detail = fmt("exact recovery %d/100 (need 95); steady-state dB: learned "
                   "%.1f, oracle %.1f (gap %.2f, limit 2), global %.1f, "
                   "non-coop %.1f (each >= 5 dB worse), %.0f s (limit 600 s)",
                   exact, learned_db, oracle_db,
                   std::abs(learned_db - oracle_db), global_db, noncoop_db,
                   secs);
  return out;
}

// ---------------------------------------------------------------- criterion 8

Outcome tracking() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = preset("fig8");
  cfg.runs = 40;
  const Experiment ex = materialize(cfg);
  const SimConfig& sim = find_variant(ex, "clustered").sim;
  const Eigen::VectorXd msd = averaged_msd(ex, sim, cfg.runs, ex.master_seed);

  const auto window_db = [&](int first, int last) {
    return db10(msd.segment(first, last - first + 1).mean());
  };
  const double floor1 = window_db(900, 999);
  const double floor2 = window_db(1900, 1999);

  // Re-convergence: a 50-iteration window mean returns to within 3 dB of the
  // previous floor inside 800 iterations of each change.
  const auto reconverges = [&](int change, double floor_db, int* when) {
    for (int i = change + 50; i <= change + 800; ++i) {
      if (window_db(i - 49, i) <= floor_db + 3.0) {
        *when = i - change;
        return true;
      }
    }
    *when = -1;
    return false;
  };
  int when2 = 0, when3 = 0;
  const bool ok2 = reconverges(1000, floor1, &when2);
  const bool ok3 = reconverges(2000, floor2, &when3);

  // The change must actually be visible before re-convergence.
  const double jump2 = db10(msd[1005]) - floor1;
  const double jump3 = db10(msd[2005]) - floor2;
  const double secs = seconds_since(t0);

  Outcome out;
  out.pass = ok2 && ok3 && jump2 > 3.0 && jump3 > 3.0 && secs < 600.0;
  out.detail = fmt("floors %.1f / %.1f dB, jumps %.1f / %.1f dB, "
                   "re-converged %d and %d iters after the changes "
                   "(limit 800), %.0f s (limit 600 s)",
                   floor1, floor2, jump2, jump3, when2, when3, secs);
  return out;
}

// ---------------------------------------------------------------- criterion 9

Outcome hessian_unbiasedness() {
  const Graph g = gen_knn_sensor(20, 3, 909);
  const ShiftMatrix s = build_shift(g, ShiftKind::normalized_adjacency);
  const int order = 3;
  const int n = 20;
  CounterRng setup(909);
  Eigen::VectorXd var(n);
  for (int k = 0; k < n; ++k) var[k] = setup.next_uniform(1.0, 1.5);
  const SignalStatistics stats = SignalStatistics::white(var);

  auto src = iid_gaussian_source(var, 910);
  RegressorNetwork reg(s, order);
  const double hmu = 0.05;
  std::vector<Eigen::MatrixXd> rhat(n, Eigen::MatrixXd::Zero(order, order));
  std::vector<Eigen::MatrixXd> avg(n, Eigen::MatrixXd::Zero(order, order));
  const int total = 100000;
  const int burn = 2000;
  for (int i = 0; i < total; ++i) {
    reg.step(src->next());
    for (int k = 0; k < n; ++k) {
      rhat[k] = (1.0 - hmu) * rhat[k] +
                hmu * (reg.rows().row(k).transpose() * reg.rows().row(k));
      if (i >= burn) avg[k] += rhat[k];
    }
  }
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    avg[k] /= total - burn;
    const Eigen::MatrixXd target = local_covariance(s, stats, k, order);
    worst = std::max(worst, (avg[k] - target).norm() / target.norm());
  }
  Outcome out;
  out.pass = worst < 0.05;
  out.detail = fmt("worst node Frobenius error %.3f (tol 0.05) over %d "
                   "stationary samples", worst, total);
  return out;
}

// --------------------------------------------------------------- criterion 10

Outcome lyapunov_and_ar() {
  const Graph g = gen_knn_sensor(30, 4, 1001);
  const ShiftMatrix s = build_shift(g, ShiftKind::normalized_adjacency);
  const Eigen::MatrixXd rx = solve_lyapunov(s.s);
  const double residual =
      (s.s * rx * s.s.transpose() - rx + Eigen::MatrixXd::Identity(30, 30))
          .norm() /
      rx.norm();

  auto src = ar_time_vertex_source(s, 1002, rx);
  const int t = 100000;
  std::vector<Eigen::VectorXd> last;
  std::vector<Eigen::MatrixXd> lag(3, Eigen::MatrixXd::Zero(30, 30));
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < t; ++i) {
    const Eigen::VectorXd x = src->next();
    last.insert(last.begin(), x);
    if (last.size() > 3) last.pop_back();
    for (int tau = 0; tau < static_cast<int>(last.size()); ++tau) {
      lag[tau] += x * last[tau].transpose();
      counts[tau] += 1;
    }
  }
  double worst = 0.0;
  Eigen::MatrixXd target = rx;
  for (int tau = 0; tau < 3; ++tau) {
    lag[tau] /= counts[tau];
    if (tau > 0) target = s.s * target;
    worst = std::max(worst, (lag[tau] - target).norm() / target.norm());
  }
  Outcome out;
  out.pass = residual < 1e-10 && worst < 0.05;
  out.detail = fmt("Lyapunov residual %.2g (tol 1e-10), worst lag-covariance "
                   "error %.3f Frobenius (tol 0.05)", residual, worst);
  return out;
}

// --------------------------------------------------------------- criterion 11

Outcome reconstruction() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string readings = "data/noaa_readings.csv";
  const std::string coords = "data/noaa_coords.csv";
  Outcome out;
  if (std::filesystem::exists(readings) && std::filesystem::exists(coords)) {
    const TemperatureDataset data = ingest_temperature_csv(readings, coords);
    ReconstructConfig rc;
    rc.mask = random_mask(data.n(), 0.34, 3);
    rc.order = 4;
    rc.knn_k = 7;
    rc.mu = 1e-4;
    rc.multitask = true;
    rc.algorithm = "plms";
    const double plms = reconstruct_experiment(data, rc).nmse_test;
    rc.algorithm = "lmsn";
    const double lmsn = reconstruct_experiment(data, rc).nmse_test;
    out.pass = plms <= 0.05 && lmsn <= plms;
    out.detail = fmt("canonical dataset: multitask PLMS NMSE %.4g "
                     "(limit 0.05), LMSN %.4g (must not exceed PLMS), %.0f s",
                     plms, lmsn, seconds_since(t0));
    return out;
  }
  const int n = 48, t = 3600;
  const Eigen::VectorXd mask = random_mask(n, 0.6, 3);
  const TemperatureDataset data = gen_synthetic_temperature(n, t, 7, mask, 7);
  ReconstructConfig rc;
  rc.mask = mask;
  rc.order = 4;
  rc.knn_k = 7;
  rc.mu = 1e-4;
  rc.multitask = true;
  rc.algorithm = "plms";
  const double plms = reconstruct_experiment(data, rc).nmse_test;
  out.pass = plms <= 0.02;
  out.detail = fmt("canonical dataset absent; synthetic stand-in: multitask "
                   "PLMS NMSE %.4g (limit 0.02), %.0f s",
                   plms, seconds_since(t0));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"regressor distributed/centralized equivalence", regressor_equivalence},
      {"theory self-consistency (F/B forms, series)", theory_self_consistency},
      {"scalar closed-form oracle", scalar_oracle},
      {"theory vs simulation at desk scale", theory_vs_simulation},
      {"convergence ordering at matched steady state", convergence_ordering},
      {"preconditioner exactness and equalized modes", preconditioner_exactness},
      {"clustering recovery and MSD comparisons", clustering_recovery},
      {"tracking through staged changes", tracking},
      {"Hessian-estimate unbiasedness", hessian_unbiasedness},
      {"Lyapunov solver and AR source statistics", lyapunov_and_ar},
      {"temperature reconstruction", reconstruction},
  };

  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty())
    for (std::size_t i = 1; i <= criteria.size(); ++i)
      which.push_back(static_cast<int>(i));

  int failures = 0;
  for (int idx : which) {
    if (idx < 1 || idx > static_cast<int>(criteria.size())) {
      std::printf("FAIL criterion %d: no such criterion\n", idx);
      ++failures;
      continue;
    }
    const auto& c = criteria[idx - 1];
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %d: %s — %s\n", out.pass ? "PASS" : "FAIL", idx,
                c.name, out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
