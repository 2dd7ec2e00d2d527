#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gdlms/dataset.hpp"
#include "gdlms/errors.hpp"
#include "gdlms/harness.hpp"
#include "gdlms/linalg.hpp"

using namespace gdlms;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string temp_dir(const std::string& leaf) {
  const std::string dir =
      (std::filesystem::temp_directory_path() / leaf).string();
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("round trip through emit_config") {
    const ExperimentConfig cfg = preset("fig5");
    const std::string path = temp_dir("gdlms_cfg") + "/fig5.cfg";
    emit_config(cfg, path);
    const ExperimentConfig back = parse_config_file(path);
    CHECK(back.graph_generator == cfg.graph_generator);
    CHECK(back.n == cfg.n);
    CHECK(back.order == cfg.order);
    CHECK(back.coeff_source == "stages");
    REQUIRE(back.stages.size() == 1);
    CHECK(back.stages[0].cluster_ranges == cfg.stages[0].cluster_ranges);
    CHECK(back.stages[0].cluster_coeffs == cfg.stages[0].cluster_coeffs);
    CHECK(back.clustering.nu == cfg.clustering.nu);
    REQUIRE(back.variants.size() == cfg.variants.size());
    for (std::size_t i = 0; i < back.variants.size(); ++i) {
      CHECK(back.variants[i].label == cfg.variants[i].label);
      CHECK(back.variants[i].mu == cfg.variants[i].mu);
      CHECK(back.variants[i].combination == cfg.variants[i].combination);
    }
  }
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("[graph]\nn = 4\nbogus_key = 1\n"),
        doctest::Contains("bogus_key"), config_error);
  }
  SUBCASE("malformed numbers are rejected") {
    CHECK_THROWS_AS(parse_config_text("[run]\nruns = many\n"), config_error);
  }
  SUBCASE("unknown preset name") {
    CHECK_THROWS_WITH_AS(preset("fig99"), doctest::Contains("fig99"),
                         config_error);
  }
}

TEST_CASE("preset values match the published setups") {
  SUBCASE("fig1: Erdos-Renyi, N=60, M=5, 500 runs, the four step-sizes") {
    const ExperimentConfig cfg = preset("fig1");
    CHECK(cfg.graph_generator == "erdos_renyi");
    CHECK(cfg.n == 60);
    CHECK(cfg.order == 5);
    CHECK(cfg.runs == 500);
    REQUIRE(cfg.variants.size() == 4);
    CHECK(cfg.variants[0].algorithm == "lms");
    CHECK(cfg.variants[0].mu == 0.08);
    CHECK(cfg.variants[1].algorithm == "plms");
    CHECK(cfg.variants[1].mu == 0.008);
    CHECK(cfg.variants[2].algorithm == "lmsn");
    CHECK(cfg.variants[2].mu == 0.01);
    CHECK(cfg.variants[3].algorithm == "nlms");
    CHECK(cfg.variants[3].mu == 0.05);
    for (const auto& v : cfg.variants) CHECK(v.epsilon == 0.01);
  }
  SUBCASE("fig4: AR input, M=3, eps=0.1, step-sizes 0.1/0.038/0.03") {
    const ExperimentConfig cfg = preset("fig4");
    CHECK(cfg.source == "ar");
    CHECK(cfg.order == 3);
    REQUIRE(cfg.variants.size() == 3);
    CHECK(cfg.variants[0].algorithm == "lms");
    CHECK(cfg.variants[0].mu == 0.1);
    CHECK(cfg.variants[1].algorithm == "lmsn");
    CHECK(cfg.variants[1].mu == 0.038);
    CHECK(cfg.variants[2].algorithm == "plms");
    CHECK(cfg.variants[2].mu == 0.03);
    for (const auto& v : cfg.variants) CHECK(v.epsilon == 0.1);
  }
  SUBCASE("fig5: three clusters, mu = 0.01, {tau,beta,theta,nu}") {
    const ExperimentConfig cfg = preset("fig5");
    REQUIRE(cfg.stages.size() == 1);
    CHECK(cfg.stages[0].cluster_coeffs[0] ==
          std::vector<double>{0.5, 0.4, 0.9});
    CHECK(cfg.stages[0].cluster_coeffs[1] ==
          std::vector<double>{0.3, 0.1, 0.4});
    CHECK(cfg.stages[0].cluster_coeffs[2] ==
          std::vector<double>{0.9, 0.3, 0.7});
    CHECK(cfg.clustering.tau == 0.9);
    CHECK(cfg.clustering.beta == 0.01);
    CHECK(cfg.clustering.theta == 0.5);
    CHECK(cfg.clustering.nu == 0.98);
    for (const auto& v : cfg.variants) {
      CHECK(v.mu == 0.01);
      CHECK(v.algorithm == "plms");
    }
  }
  SUBCASE("every preset materializes") {
    for (const std::string& name : preset_names()) {
      if (name == "table1") continue;  // reconstruct-only preset
      ExperimentConfig cfg = preset(name);
      cfg.runs = 1;
      cfg.iters = 2;
      CHECK_NOTHROW(materialize(cfg));
    }
  }
}

TEST_CASE("nmse") {
  Eigen::MatrixXd truth(4, 3);
  truth << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  Eigen::VectorXd mask(3);
  mask << 0, 1, 1;  // nodes 2 and 3 count

  SUBCASE("perfect estimates give zero") {
    CHECK(nmse(truth, truth, mask, 0, 3) == 0.0);
  }
  SUBCASE("zero estimates give one") {
    CHECK(nmse(truth, Eigen::MatrixXd::Zero(4, 3), mask, 0, 3) ==
          doctest::Approx(1.0));
  }
  SUBCASE("constant offset on one masked node") {
    Eigen::MatrixXd est = truth;
    const double c = 0.5;
    for (int i = 1; i <= 2; ++i) est(i, 1) += c;
    Eigen::VectorXd one_node(3);
    one_node << 0, 1, 0;
    double energy = 0.0;
    for (int i = 1; i <= 2; ++i) energy += truth(i, 1) * truth(i, 1);
    CHECK(nmse(truth, est, one_node, 1, 2) ==
          doctest::Approx(2 * c * c / energy).epsilon(1e-12));
  }
  SUBCASE("zero denominator is an error") {
    Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(4, 3);
    CHECK_THROWS_AS(nmse(zeros, zeros, mask, 0, 3), numeric_error);
  }
}

TEST_CASE("temperature CSV ingestion") {
  const std::string dir = temp_dir("gdlms_csv");
  SUBCASE("synthetic 5x3 file round-trips shapes") {
    {
      std::ofstream f(dir + "/r.csv");
      f << "a,b,c\n";  // header
      for (int i = 0; i < 5; ++i)
        f << i + 0.5 << "," << i + 1.5 << "," << i + 2.5 << "\n";
      std::ofstream c(dir + "/c.csv");
      for (int k = 0; k < 3; ++k) c << 0.1 * k << "," << 0.2 * k << "\n";
    }
    const TemperatureDataset d =
        ingest_temperature_csv(dir + "/r.csv", dir + "/c.csv");
    CHECK(d.t() == 5);
    CHECK(d.n() == 3);
    CHECK(d.readings(0, 0) == 0.5);
    CHECK(d.coordinates(2, 1) == doctest::Approx(0.4));
  }
  SUBCASE("coordinate count mismatch names both counts") {
    {
      std::ofstream f(dir + "/r2.csv");
      f << "1,2,3\n4,5,6\n";
      std::ofstream c(dir + "/c2.csv");
      c << "0,0\n1,1\n1,0\n0,1\n";
    }
    CHECK_THROWS_WITH_AS(ingest_temperature_csv(dir + "/r2.csv", dir + "/c2.csv"),
                         doctest::Contains("4"), config_error);
  }
  SUBCASE("missing values are rejected with row and column") {
    {
      std::ofstream f(dir + "/r3.csv");
      f << "1,2,3\n4,,6\n";
      std::ofstream c(dir + "/c3.csv");
      c << "0,0\n1,1\n1,0\n";
    }
    CHECK_THROWS_WITH_AS(ingest_temperature_csv(dir + "/r3.csv", dir + "/c3.csv"),
                         doctest::Contains("row 2"), config_error);
  }
}

TEST_CASE("monte carlo runner") {
  const Graph g = gen_knn_sensor(6, 2, 21);
  const ShiftMatrix s = build_shift(g, ShiftKind::normalized_adjacency);
  Eigen::VectorXd h(2);
  h << 0.6, 0.3;
  TruthStage stage;
  stage.start_iter = 0;
  stage.bank = h.transpose().replicate(6, 1);
  stage.cluster_of.assign(6, 0);

  SimConfig sim;
  sim.algorithm = AlgorithmKind::lms;
  sim.mu = Eigen::VectorXd::Constant(6, 0.05);
  sim.combine = CombineMode::uniform;
  sim.iters = 300;
  sim.stages = {stage};
  const SourceSpec source = SourceSpec::iid(Eigen::VectorXd::Ones(6));

  SUBCASE("noiseless run from the truth stays at zero MSD") {
    SimConfig at_truth = sim;
    at_truth.initial_h = stage.bank;
    const McResult mc =
        run_monte_carlo(g, s, at_truth, source,
                        Eigen::VectorXd::Zero(6), 3, 99);
    CHECK(mc.msd.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("deterministic across repeated invocations") {
    const Eigen::VectorXd noise = Eigen::VectorXd::Constant(6, 0.1);
    const McResult a = run_monte_carlo(g, s, sim, source, noise, 8, 5);
    const McResult b = run_monte_carlo(g, s, sim, source, noise, 8, 5);
    CHECK((a.msd - b.msd).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("doubling the run count moves the tail average only slightly") {
    const Eigen::VectorXd noise = Eigen::VectorXd::Constant(6, 0.1);
    SimConfig longer = sim;
    longer.iters = 600;
    const int r = 48;
    const McResult a = run_monte_carlo(g, s, longer, source, noise, r, 7);
    const McResult b = run_monte_carlo(g, s, longer, source, noise, 2 * r, 7);
    const double ta = a.msd.tail(200).mean();
    const double tb = b.msd.tail(200).mean();
    CHECK(std::abs(ta - tb) / tb < 2.0 / std::sqrt(double(r)));
  }
  SUBCASE("diverging runs are excluded and reported") {
    SimConfig wild = sim;
    wild.mu = Eigen::VectorXd::Constant(6, 50.0);  // far beyond the bound
    const Eigen::VectorXd noise = Eigen::VectorXd::Constant(6, 0.1);
    CHECK_THROWS_AS(run_monte_carlo(g, s, wild, source, noise, 4, 1),
                    numeric_error);  // every run diverges
  }
}

TEST_CASE("scalar closed-form config through the harness") {
  // N=1, M=1, mu=0.1, lambda=1, sigma_v^2=0.1. The exact scalar recursion
  // h~(i+1) = (1 - mu z^2) h~(i) - mu z v has steady state
  // mu sigma_v^2 / (2 - 3 mu lambda) for Gaussian z.
  Graph g;
  g.n_nodes = 1;
  g.adjacency = Eigen::MatrixXd::Zero(1, 1);
  ShiftMatrix s;
  s.kind = ShiftKind::custom;
  s.s = Eigen::MatrixXd::Zero(1, 1);
  Eigen::VectorXd h(1);
  h << 1.0;
  TruthStage stage;
  stage.start_iter = 0;
  stage.bank = h.transpose().replicate(1, 1);
  stage.cluster_of.assign(1, 0);
  SimConfig sim;
  sim.algorithm = AlgorithmKind::lms;
  sim.mu = Eigen::VectorXd::Constant(1, 0.1);
  sim.combine = CombineMode::identity;
  sim.iters = 1200;
  sim.stages = {stage};
  const McResult mc = run_monte_carlo(
      g, s, sim, SourceSpec::iid(Eigen::VectorXd::Ones(1)),
      Eigen::VectorXd::Constant(1, 0.1), 800, 17);
  const double tail = mc.msd.tail(300).mean();
  const double exact = 1e-2 / 1.7;
  CHECK(std::abs(tail - exact) < 0.10 * exact);
}

TEST_CASE("simulate command writes deterministic CSV with theory overlay") {
  ExperimentConfig cfg;
  cfg.graph_generator = "knn";
  cfg.n = 8;
  cfg.knn_k = 2;
  cfg.graph_seed = 3;
  cfg.order = 2;
  cfg.variants = {};
  VariantConfig v;
  v.label = "plms";
  v.algorithm = "plms";
  v.mu = 0.02;
  cfg.variants.push_back(v);
  cfg.runs = 6;
  cfg.iters = 120;
  cfg.trace_nodes = {1};

  const std::string d1 = temp_dir("gdlms_out1");
  const std::string d2 = temp_dir("gdlms_out2");
  CHECK(cmd_simulate(cfg, d1, false) == 0);
  CHECK(cmd_simulate(cfg, d2, false) == 0);
  const std::string a = slurp(d1 + "/msd.csv");
  CHECK(a == slurp(d2 + "/msd.csv"));
  CHECK(a.find("i,msd,msd_db,theory,theory_db") == 0);
  CHECK(slurp(d1 + "/trace_node1.csv").find("i,k,h_1,h_2") == 0);
  CHECK(slurp(d1 + "/theory.csv").find("i,zeta,zeta_db") == 0);
}

TEST_CASE("theory command needs an applicable variant") {
  ExperimentConfig cfg;
  cfg.graph_generator = "knn";
  cfg.n = 8;
  cfg.knn_k = 2;
  cfg.order = 2;
  VariantConfig v;
  v.label = "nlms";
  v.algorithm = "nlms";
  v.mu = 0.5;
  cfg.variants = {v};
  cfg.runs = 1;
  cfg.iters = 10;
  CHECK_THROWS_AS(cmd_theory(cfg, temp_dir("gdlms_out3")), config_error);
}

TEST_CASE("synthetic reconstruction pipeline") {
  const int n = 32, t = 1600;
  const Eigen::VectorXd mask = random_mask(n, 0.6, 3);
  CHECK(mask.sum() == doctest::Approx(std::lround(0.6 * n)));
  const TemperatureDataset data = gen_synthetic_temperature(n, t, 5, mask, 11);
  CHECK(data.t() == t);
  CHECK(data.n() == n);
  CHECK(data.readings.allFinite());

  ReconstructConfig rc;
  rc.knn_k = 5;
  rc.order = 4;
  rc.mask = mask;
  rc.algorithm = "plms";
  rc.multitask = true;
  rc.mu = 1e-4;
  const ReconstructResult res = reconstruct_experiment(data, rc);
  CHECK(res.nmse_test < 0.1);  // desk-scale sanity; the acceptance pins 0.02
  CHECK(res.coefficients.allFinite());

  SUBCASE("all-observed mask is rejected") {
    ReconstructConfig bad = rc;
    bad.mask = Eigen::VectorXd::Ones(n);
    const TemperatureDataset full =
        gen_synthetic_temperature(n, 400, 5, bad.mask, 11);
    CHECK_THROWS_AS(reconstruct_experiment(full, bad), numeric_error);
  }
}

TEST_CASE("mask switch degrades frozen coefficients") {
  const int n = 32, t = 5000, t_switch = 2501;
  const Eigen::VectorXd mask = random_mask(n, 0.6, 3);
  const Eigen::VectorXd mask2 = random_mask(n, 0.6, 8);
  const TemperatureDataset data =
      gen_synthetic_temperature(n, t, 5, mask, 11, mask2, t_switch);

  ReconstructConfig rc;
  rc.knn_k = 5;
  rc.order = 4;
  rc.mask = mask;
  rc.mask2 = mask2;
  rc.mask_switch = t_switch;
  rc.algorithm = "plms";
  rc.multitask = true;
  rc.mu = 1e-4;
  const ReconstructResult res = reconstruct_experiment(data, rc);
  CHECK(res.nmse_frozen_after_switch >
        5.0 * res.nmse_adapted_tail);
}
