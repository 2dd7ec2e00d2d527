#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gdlms/errors.hpp"
#include "gdlms/harness.hpp"
#include "gdlms/linalg.hpp"

namespace gdlms {

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream f(path);
  if (!f) throw config_error("cannot open for writing: " + path);
  return f;
}

void write_msd_csv(const std::string& dir, const std::string& name,
                   const Eigen::VectorXd& msd,
                   const Eigen::VectorXd* theory) {
  std::ofstream f = open_out(dir, name);
  f << "i,msd,msd_db";
  if (theory) f << ",theory,theory_db";
  f << "\n";
  for (int i = 0; i < msd.size(); ++i) {
    f << i << "," << fmt(msd[i]) << "," << fmt(db10(msd[i]));
    if (theory)
      f << "," << fmt((*theory)[i]) << "," << fmt(db10((*theory)[i]));
    f << "\n";
  }
}

void write_theory_csv(const std::string& dir, const std::string& name,
                      const std::vector<double>& zeta) {
  std::ofstream f = open_out(dir, name);
  f << "i,zeta,zeta_db\n";
  for (std::size_t i = 0; i < zeta.size(); ++i)
    f << i << "," << fmt(zeta[i]) << "," << fmt(db10(zeta[i])) << "\n";
}

void write_trace_csv(const std::string& dir, int node_1based,
                     const std::string& suffix, const Eigen::MatrixXd& trace) {
  std::ofstream f = open_out(
      dir, "trace_node" + std::to_string(node_1based) + suffix + ".csv");
  f << "i,k";
  for (int m = 1; m <= trace.cols(); ++m) f << ",h_" << m;
  f << "\n";
  for (int i = 0; i < trace.rows(); ++i) {
    f << i << "," << node_1based;
    for (int m = 0; m < trace.cols(); ++m) f << "," << fmt(trace(i, m));
    f << "\n";
  }
}

void write_cluster_csv(
    const std::string& dir, const std::string& name,
    const Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic>& e) {
  std::ofstream f = open_out(dir, name);
  for (int l = 0; l < e.rows(); ++l) {
    for (int k = 0; k < e.cols(); ++k)
      f << (k ? "," : "") << int(e(l, k));
    f << "\n";
  }
}

double tail_db(const Eigen::VectorXd& msd) {
  const int n = static_cast<int>(msd.size());
  const int window = std::max(1, n / 10);
  return db10(msd.tail(window).mean());
}

}  // namespace

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir,
                 bool write_cluster_snapshots) {
  Experiment ex = materialize(cfg);
  const bool single = ex.variants.size() == 1;
  bool any_diverged = false;

  for (std::size_t vi = 0; vi < ex.variants.size(); ++vi) {
    const auto& v = ex.variants[vi];
    const McResult mc =
        run_monte_carlo(ex.graph, ex.shift, v.sim, ex.source,
                        ex.noise_variances, ex.runs, ex.master_seed,
                        ex.probes);

    std::vector<double> theory_curve;
    Eigen::VectorXd theory_vec;
    const Eigen::VectorXd* theory_ptr = nullptr;
    if (ex.theory_overlay && v.theory_applicable) {
      const TheoryModel tm = variant_theory_model(ex, v);
      if (mean_stability(tm).is_stable) {
        theory_curve = transient_msd_B(tm, ex.iters);
        theory_vec = Eigen::Map<const Eigen::VectorXd>(
            theory_curve.data(), static_cast<int>(theory_curve.size()));
        theory_ptr = &theory_vec;
      } else {
        std::cerr << "theory overlay skipped for " << v.label
                  << ": mean recursion unstable\n";
      }
    }

    const std::string suffix = single ? "" : "_" + v.label;
    write_msd_csv(out_dir, "msd" + suffix + ".csv", mc.msd, theory_ptr);
    if (theory_ptr)
      write_theory_csv(out_dir, "theory" + suffix + ".csv", theory_curve);

    for (std::size_t j = 0; j < ex.probes.trace_nodes.size(); ++j)
      write_trace_csv(out_dir, ex.probes.trace_nodes[j] + 1, suffix,
                      mc.run0.traces[j]);
    if (write_cluster_snapshots)
      for (const auto& [iter, e] : mc.run0.e_snapshots)
        write_cluster_csv(out_dir,
                          "clusters_" + std::to_string(iter) + suffix + ".csv",
                          e);

    std::cout << (v.label.empty() ? std::string("run") : v.label)
              << ": steady-state MSD ~ " << fmt(tail_db(mc.msd)) << " dB";
    if (theory_ptr) std::cout << " (theory " << fmt(db10(theory_curve.back())) << " dB)";
    if (!mc.diverged_runs.empty()) {
      any_diverged = true;
      std::cout << "  [EXCLUDED " << mc.diverged_runs.size()
                << " diverged runs:";
      for (int r : mc.diverged_runs) std::cout << " " << r;
      std::cout << "]";
    }
    std::cout << "\n";
  }
  return any_diverged ? 3 : 0;
}

int cmd_theory(const ExperimentConfig& cfg, const std::string& out_dir) {
  Experiment ex = materialize(cfg);
  bool any = false;
  const bool single = ex.variants.size() == 1;
  for (const auto& v : ex.variants) {
    if (!v.theory_applicable) continue;
    any = true;
    const TheoryModel tm = variant_theory_model(ex, v);
    const MeanStability st = mean_stability(tm);
    std::cout << (v.label.empty() ? std::string("model") : v.label)
              << ": rho(B) = " << fmt(st.rho)
              << (st.is_stable ? " (stable)"
                               : st.marginal ? " (marginal)" : " (unstable)")
              << ", per-node sufficient bounds in ["
              << fmt(st.sufficient_bounds.minCoeff()) << ", "
              << fmt(st.sufficient_bounds.maxCoeff()) << "]\n";
    const std::vector<double> zeta = transient_msd_B(tm, ex.iters);
    const double ss = steady_state_msd(tm, SteadyStateForm::series);
    std::cout << "  steady-state MSD " << fmt(ss) << " (" << fmt(db10(ss))
              << " dB)\n";
    write_theory_csv(out_dir, single ? "theory.csv" : "theory_" + v.label + ".csv",
                     zeta);
  }
  if (!any)
    throw config_error(
        "theory command: no variant admits the closed-form model (needs lms "
        "or plms, a single truth stage, and a non-learned combination rule)");
  return 0;
}

namespace {

void parse_recon_entry(const std::string& entry, bool* multitask,
                       std::string* algorithm) {
  const std::size_t us = entry.find('_');
  if (us == std::string::npos)
    throw config_error("reconstruct algorithm entries look like "
                       "multitask_plms or singletask_lmsn, got: " + entry);
  const std::string mode = entry.substr(0, us);
  if (mode == "multitask")
    *multitask = true;
  else if (mode == "singletask")
    *multitask = false;
  else
    throw config_error("unknown reconstruct mode: " + mode);
  *algorithm = entry.substr(us + 1);
}

}  // namespace

int cmd_reconstruct(const ExperimentConfig& cfg, const std::string& out_dir) {
  const auto& r = cfg.recon;
  TemperatureDataset data;
  Eigen::VectorXd mask, mask2;

  const bool have_files =
      !r.readings_file.empty() && std::filesystem::exists(r.readings_file) &&
      !r.coords_file.empty() && std::filesystem::exists(r.coords_file);
  if (have_files) {
    data = ingest_temperature_csv(r.readings_file, r.coords_file);
    mask = random_mask(data.n(), r.mask_fraction, r.mask_seed);
    if (r.mask_switch > 0)
      mask2 = random_mask(data.n(), r.mask2_fraction, r.mask2_seed);
  } else if (r.synthetic) {
    if (!r.readings_file.empty())
      std::cerr << "reconstruct: dataset files not found, using the synthetic "
                   "stand-in\n";
    mask = random_mask(r.synth_n, r.mask_fraction, r.mask_seed);
    if (r.mask_switch > 0) {
      mask2 = random_mask(r.synth_n, r.mask2_fraction, r.mask2_seed);
      data = gen_synthetic_temperature(r.synth_n, r.synth_t, r.knn_k, mask,
                                       r.synth_seed, mask2, r.mask_switch);
    } else {
      data = gen_synthetic_temperature(r.synth_n, r.synth_t, r.knn_k, mask,
                                       r.synth_seed);
    }
  } else {
    throw config_error("reconstruct: no dataset files and synthetic disabled");
  }

  std::ofstream nmse_out = open_out(out_dir, "nmse.txt");
  for (const std::string& entry : r.algorithms) {
    ReconstructConfig rc;
    parse_recon_entry(entry, &rc.multitask, &rc.algorithm);
    rc.knn_k = r.knn_k;
    rc.order = r.order;
    rc.train_fraction = r.train_fraction;
    rc.mask = mask;
    rc.mask2 = mask2;
    rc.mask_switch = r.mask_switch;
    rc.mu = rc.algorithm == "lms" ? r.mu_lms : r.mu;
    rc.epsilon = r.epsilon;
    rc.hessian_mu = r.hessian_mu;
    rc.clustering = cfg.clustering;
    for (int node : r.trace_nodes) rc.trace_nodes.push_back(node - 1);

    const ReconstructResult res = reconstruct_experiment(data, rc);
    nmse_out << entry << " " << fmt(res.nmse_test);
    if (r.mask_switch > 0)
      nmse_out << " frozen_after_switch " << fmt(res.nmse_frozen_after_switch)
               << " adapted_tail " << fmt(res.nmse_adapted_tail);
    nmse_out << "\n";
    std::cout << entry << ": NMSE = " << fmt(res.nmse_test) << "\n";

    if (rc.multitask && res.clusters.size() > 0)
      write_cluster_csv(out_dir, "clusters_" + entry + ".csv", res.clusters);
    for (std::size_t j = 0; j < rc.trace_nodes.size(); ++j) {
      std::ofstream f = open_out(out_dir,
                                 "trace_node" +
                                     std::to_string(rc.trace_nodes[j] + 1) +
                                     "_" + entry + ".csv");
      f << "i,y,yhat\n";
      const Eigen::MatrixXd& tr = res.traces[j];
      for (int i = 0; i < tr.rows(); ++i)
        f << fmt(tr(i, 0)) << "," << fmt(tr(i, 1)) << "," << fmt(tr(i, 2))
          << "\n";
    }
  }
  return 0;
}

}  // namespace gdlms
