#include "gdlms/harness.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "gdlms/errors.hpp"
#include "gdlms/rng.hpp"

namespace gdlms {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  std::size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

/// Flat key-value config text with [section] headers and '#' comments.
/// Every key must be consumed by the loader; leftovers are config errors.
class ConfigText {
 public:
  ConfigText(const std::string& text, std::string origin)
      : origin_(std::move(origin)) {
    std::stringstream ss(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw config_error(origin_ + ":" + std::to_string(lineno) +
                             ": malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        sections_.push_back(section);
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw config_error(origin_ + ":" + std::to_string(lineno) +
                           ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      entries_[section + "." + key] = value;
    }
  }

  bool has(const std::string& section, const std::string& key) const {
    return entries_.count(section + "." + key) > 0;
  }

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) {
    const std::string full = section + "." + key;
    auto it = entries_.find(full);
    if (it == entries_.end()) return fallback;
    consumed_.insert(full);
    return it->second;
  }

  double get_double(const std::string& s, const std::string& k, double d) {
    const std::string v = get(s, k, "");
    if (v.empty()) return d;
    try {
      return std::stod(v);
    } catch (...) {
      throw config_error(origin_ + ": bad number for " + s + "." + k);
    }
  }

  int get_int(const std::string& s, const std::string& k, int d) {
    const std::string v = get(s, k, "");
    if (v.empty()) return d;
    try {
      return std::stoi(v);
    } catch (...) {
      throw config_error(origin_ + ": bad integer for " + s + "." + k);
    }
  }

  std::uint64_t get_u64(const std::string& s, const std::string& k,
                        std::uint64_t d) {
    const std::string v = get(s, k, "");
    if (v.empty()) return d;
    try {
      return std::stoull(v);
    } catch (...) {
      throw config_error(origin_ + ": bad seed for " + s + "." + k);
    }
  }

  bool get_bool(const std::string& s, const std::string& k, bool d) {
    const std::string v = get(s, k, "");
    if (v.empty()) return d;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error(origin_ + ": bad boolean for " + s + "." + k);
  }

  std::vector<double> get_doubles(const std::string& s, const std::string& k) {
    std::vector<double> out;
    std::stringstream ss(get(s, k, ""));
    std::string tok;
    while (ss >> tok) {
      try {
        out.push_back(std::stod(tok));
      } catch (...) {
        throw config_error(origin_ + ": bad number list for " + s + "." + k);
      }
    }
    return out;
  }

  std::vector<int> get_ints(const std::string& s, const std::string& k) {
    std::vector<int> out;
    for (double v : get_doubles(s, k)) out.push_back(static_cast<int>(v));
    return out;
  }

  std::vector<std::string> get_words(const std::string& s,
                                     const std::string& k) {
    std::vector<std::string> out;
    std::stringstream ss(get(s, k, ""));
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
  }

  const std::vector<std::string>& sections() const { return sections_; }

  void check_all_consumed() const {
    std::string leftovers;
    for (const auto& [key, value] : entries_)
      if (!consumed_.count(key)) leftovers += " " + key;
    if (!leftovers.empty())
      throw config_error(origin_ + ": unknown config keys:" + leftovers);
  }

 private:
  std::string origin_;
  std::map<std::string, std::string> entries_;
  std::set<std::string> consumed_;
  std::vector<std::string> sections_;
};

VariantConfig parse_variant(ConfigText& t, const std::string& section,
                            const std::string& label) {
  VariantConfig v;
  v.label = label;
  v.algorithm = t.get(section, "algorithm", "plms");
  v.mu = t.get_double(section, "mu", 0.01);
  v.mu_rule = t.get(section, "mu_rule", "uniform");
  v.bound_fraction = t.get_double(section, "bound_fraction", 0.05);
  v.epsilon = t.get_double(section, "epsilon", 0.01);
  v.hessian_mu = t.get_double(section, "hessian_mu", 0.05);
  v.combination = t.get(section, "combination", "uniform");
  v.mechanism = t.get(section, "mechanism", "normalized");
  return v;
}

std::vector<std::pair<int, int>> parse_ranges(const std::string& text,
                                              const std::string& what) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(text);
  std::string tok;
  while (ss >> tok) {
    const std::size_t colon = tok.find(':');
    if (colon == std::string::npos)
      throw config_error("bad cluster range '" + tok + "' in " + what);
    out.emplace_back(std::stoi(tok.substr(0, colon)),
                     std::stoi(tok.substr(colon + 1)));
  }
  return out;
}

std::vector<std::vector<double>> parse_coeff_groups(const std::string& text,
                                                    const std::string& what) {
  std::vector<std::vector<double>> out;
  std::stringstream groups(text);
  std::string group;
  while (std::getline(groups, group, '|')) {
    std::vector<double> coeffs;
    std::stringstream ss(group);
    double v;
    while (ss >> v) coeffs.push_back(v);
    if (coeffs.empty())
      throw config_error("empty coefficient group in " + what);
    out.push_back(std::move(coeffs));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  ConfigText t(text, origin);
  ExperimentConfig cfg;

  cfg.graph_generator = t.get("graph", "generator", cfg.graph_generator);
  cfg.n = t.get_int("graph", "n", cfg.n);
  cfg.knn_k = t.get_int("graph", "knn_k", cfg.knn_k);
  cfg.graph_seed = t.get_u64("graph", "seed", cfg.graph_seed);
  cfg.graph_file = t.get("graph", "file", "");
  cfg.coords_file = t.get("graph", "coords", "");

  cfg.shift_kind = t.get("shift", "kind", cfg.shift_kind);

  cfg.order = t.get_int("filter", "order", cfg.order);
  cfg.coeff_source = t.get("filter", "coeff_source", cfg.coeff_source);
  cfg.coeffs = t.get_doubles("filter", "coeffs");
  for (int s = 1;; ++s) {
    const std::string prefix = "stage" + std::to_string(s);
    if (!t.has("filter", prefix + "_at")) break;
    StageSpec stage;
    stage.at = t.get_int("filter", prefix + "_at", 0);
    stage.cluster_ranges = parse_ranges(
        t.get("filter", prefix + "_clusters", ""), prefix + "_clusters");
    stage.cluster_coeffs = parse_coeff_groups(
        t.get("filter", prefix + "_coeffs", ""), prefix + "_coeffs");
    cfg.stages.push_back(std::move(stage));
  }

  cfg.source = t.get("signal", "source", cfg.source);
  cfg.var_low = t.get_double("signal", "var_low", cfg.var_low);
  cfg.var_high = t.get_double("signal", "var_high", cfg.var_high);

  cfg.noise_var_low = t.get_double("noise", "var_low", cfg.noise_var_low);
  cfg.noise_var_high = t.get_double("noise", "var_high", cfg.noise_var_high);

  cfg.clustering.tau = t.get_double("clustering", "tau", cfg.clustering.tau);
  cfg.clustering.beta = t.get_double("clustering", "beta", cfg.clustering.beta);
  cfg.clustering.theta =
      t.get_double("clustering", "theta", cfg.clustering.theta);
  cfg.clustering.nu = t.get_double("clustering", "nu", cfg.clustering.nu);

  for (const std::string& section : t.sections()) {
    if (section.rfind("variant:", 0) == 0)
      cfg.variants.push_back(
          parse_variant(t, section, section.substr(std::string("variant:").size())));
  }
  if (cfg.variants.empty() &&
      (t.has("algorithm", "name") || t.has("algorithm", "mu"))) {
    VariantConfig v = parse_variant(t, "algorithm", "");
    v.algorithm = t.get("algorithm", "name", v.algorithm);
    v.label = v.algorithm;
    cfg.variants.push_back(std::move(v));
  }

  cfg.runs = t.get_int("run", "runs", cfg.runs);
  cfg.iters = t.get_int("run", "iters", cfg.iters);
  cfg.master_seed = t.get_u64("run", "master_seed", cfg.master_seed);
  cfg.theory_overlay = t.get_bool("run", "theory_overlay", cfg.theory_overlay);
  cfg.trace_nodes = t.get_ints("run", "trace_nodes");
  cfg.snapshot_iters = t.get_ints("run", "snapshot_iters");

  auto& r = cfg.recon;
  r.readings_file = t.get("reconstruct", "readings", "");
  r.coords_file = t.get("reconstruct", "coords", "");
  r.synthetic = t.get_bool("reconstruct", "synthetic", r.synthetic);
  r.synth_n = t.get_int("reconstruct", "synth_n", r.synth_n);
  r.synth_t = t.get_int("reconstruct", "synth_t", r.synth_t);
  r.synth_seed = t.get_u64("reconstruct", "synth_seed", r.synth_seed);
  r.knn_k = t.get_int("reconstruct", "knn_k", r.knn_k);
  r.order = t.get_int("reconstruct", "order", r.order);
  r.train_fraction =
      t.get_double("reconstruct", "train_fraction", r.train_fraction);
  r.mask_fraction =
      t.get_double("reconstruct", "mask_fraction", r.mask_fraction);
  r.mask_seed = t.get_u64("reconstruct", "mask_seed", r.mask_seed);
  r.mask_switch = t.get_int("reconstruct", "mask_switch", r.mask_switch);
  r.mask2_fraction =
      t.get_double("reconstruct", "mask2_fraction", r.mask2_fraction);
  r.mask2_seed = t.get_u64("reconstruct", "mask2_seed", r.mask2_seed);
  r.mu = t.get_double("reconstruct", "mu", r.mu);
  r.mu_lms = t.get_double("reconstruct", "mu_lms", r.mu_lms);
  r.epsilon = t.get_double("reconstruct", "epsilon", r.epsilon);
  r.hessian_mu = t.get_double("reconstruct", "hessian_mu", r.hessian_mu);
  if (t.has("reconstruct", "algorithms"))
    r.algorithms = t.get_words("reconstruct", "algorithms");
  r.trace_nodes = t.get_ints("reconstruct", "trace_nodes");

  t.check_all_consumed();

  if (cfg.runs < 1 || cfg.iters < 1)
    throw config_error("run.runs and run.iters must be >= 1");
  if (cfg.order < 1) throw config_error("filter.order must be >= 1");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

void emit_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw config_error("cannot open for writing: " + path);
  f.precision(17);
  f << "[graph]\n";
  f << "generator = " << cfg.graph_generator << "\n";
  f << "n = " << cfg.n << "\n";
  f << "knn_k = " << cfg.knn_k << "\n";
  f << "seed = " << cfg.graph_seed << "\n";
  if (!cfg.graph_file.empty()) f << "file = " << cfg.graph_file << "\n";
  if (!cfg.coords_file.empty()) f << "coords = " << cfg.coords_file << "\n";
  f << "\n[shift]\nkind = " << cfg.shift_kind << "\n";
  f << "\n[filter]\n";
  f << "order = " << cfg.order << "\n";
  f << "coeff_source = " << cfg.coeff_source << "\n";
  if (!cfg.coeffs.empty()) {
    f << "coeffs =";
    for (double c : cfg.coeffs) f << " " << c;
    f << "\n";
  }
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const auto& st = cfg.stages[s];
    f << "stage" << s + 1 << "_at = " << st.at << "\n";
    f << "stage" << s + 1 << "_clusters =";
    for (const auto& [a, b] : st.cluster_ranges) f << " " << a << ":" << b;
    f << "\nstage" << s + 1 << "_coeffs = ";
    for (std::size_t q = 0; q < st.cluster_coeffs.size(); ++q) {
      if (q) f << " | ";
      for (std::size_t m = 0; m < st.cluster_coeffs[q].size(); ++m)
        f << (m ? " " : "") << st.cluster_coeffs[q][m];
    }
    f << "\n";
  }
  f << "\n[signal]\n";
  f << "source = " << cfg.source << "\n";
  f << "var_low = " << cfg.var_low << "\n";
  f << "var_high = " << cfg.var_high << "\n";
  f << "\n[noise]\n";
  f << "var_low = " << cfg.noise_var_low << "\n";
  f << "var_high = " << cfg.noise_var_high << "\n";
  f << "\n[clustering]\n";
  f << "tau = " << cfg.clustering.tau << "\n";
  f << "beta = " << cfg.clustering.beta << "\n";
  f << "theta = " << cfg.clustering.theta << "\n";
  f << "nu = " << cfg.clustering.nu << "\n";
  for (const auto& v : cfg.variants) {
    f << "\n[variant:" << v.label << "]\n";
    f << "algorithm = " << v.algorithm << "\n";
    f << "mu = " << v.mu << "\n";
    if (v.mu_rule != "uniform") {
      f << "mu_rule = " << v.mu_rule << "\n";
      f << "bound_fraction = " << v.bound_fraction << "\n";
    }
    f << "epsilon = " << v.epsilon << "\n";
    f << "hessian_mu = " << v.hessian_mu << "\n";
    f << "combination = " << v.combination << "\n";
    if (v.mechanism != "normalized") f << "mechanism = " << v.mechanism << "\n";
  }
  f << "\n[run]\n";
  f << "runs = " << cfg.runs << "\n";
  f << "iters = " << cfg.iters << "\n";
  f << "master_seed = " << cfg.master_seed << "\n";
  f << "theory_overlay = " << (cfg.theory_overlay ? "true" : "false") << "\n";
  if (!cfg.trace_nodes.empty()) {
    f << "trace_nodes =";
    for (int k : cfg.trace_nodes) f << " " << k;
    f << "\n";
  }
  if (!cfg.snapshot_iters.empty()) {
    f << "snapshot_iters =";
    for (int i : cfg.snapshot_iters) f << " " << i;
    f << "\n";
  }
  const auto& r = cfg.recon;
  f << "\n[reconstruct]\n";
  if (!r.readings_file.empty()) f << "readings = " << r.readings_file << "\n";
  if (!r.coords_file.empty()) f << "coords = " << r.coords_file << "\n";
  f << "synthetic = " << (r.synthetic ? "true" : "false") << "\n";
  f << "synth_n = " << r.synth_n << "\n";
  f << "synth_t = " << r.synth_t << "\n";
  f << "synth_seed = " << r.synth_seed << "\n";
  f << "knn_k = " << r.knn_k << "\n";
  f << "order = " << r.order << "\n";
  f << "train_fraction = " << r.train_fraction << "\n";
  f << "mask_fraction = " << r.mask_fraction << "\n";
  f << "mask_seed = " << r.mask_seed << "\n";
  if (r.mask_switch > 0) {
    f << "mask_switch = " << r.mask_switch << "\n";
    f << "mask2_fraction = " << r.mask2_fraction << "\n";
    f << "mask2_seed = " << r.mask2_seed << "\n";
  }
  f << "mu = " << r.mu << "\n";
  f << "mu_lms = " << r.mu_lms << "\n";
  f << "epsilon = " << r.epsilon << "\n";
  f << "hessian_mu = " << r.hessian_mu << "\n";
  f << "algorithms =";
  for (const auto& a : r.algorithms) f << " " << a;
  f << "\n";
  if (!r.trace_nodes.empty()) {
    f << "trace_nodes =";
    for (int k : r.trace_nodes) f << " " << k;
    f << "\n";
  }
}

namespace {

ExperimentConfig sensor_base() {
  ExperimentConfig cfg;
  cfg.graph_generator = "knn";
  cfg.n = 60;
  cfg.knn_k = 5;
  // This realization keeps at least two retained coefficients (M_k >= 2) at
  // every node under the tau = 0.9 truncation rule.
  cfg.graph_seed = 22;
  cfg.shift_kind = "normalized_adjacency";
  cfg.order = 5;
  cfg.coeff_source = "uniform01";
  cfg.source = "iid";
  cfg.runs = 500;
  cfg.iters = 2500;
  return cfg;
}

VariantConfig variant(const std::string& label, const std::string& algo,
                      double mu, double eps = 0.01,
                      const std::string& combination = "uniform") {
  VariantConfig v;
  v.label = label;
  v.algorithm = algo;
  v.mu = mu;
  v.epsilon = eps;
  v.combination = combination;
  return v;
}

StageSpec three_cluster_stage(int at) {
  StageSpec st;
  st.at = at;
  st.cluster_ranges = {{1, 20}, {21, 40}, {41, 60}};
  st.cluster_coeffs = {{0.5, 0.4, 0.9}, {0.3, 0.1, 0.4}, {0.9, 0.3, 0.7}};
  return st;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig1", "fig2a", "fig2b", "fig2c", "fig3",
          "fig4", "fig5", "fig7",  "fig8",  "table1"};
}

ExperimentConfig preset(const std::string& name) {
  if (name == "fig1") {
    ExperimentConfig cfg = sensor_base();
    cfg.graph_generator = "erdos_renyi";
    cfg.graph_seed = 1;
    cfg.variants = {variant("lms", "lms", 0.08),
                    variant("plms", "plms", 0.008),
                    variant("lmsn", "lmsn", 0.01),
                    variant("nlms", "nlms", 0.05)};
    return cfg;
  }
  if (name == "fig2a") {
    ExperimentConfig cfg = sensor_base();
    cfg.variants = {variant("lms", "lms", 0.08),
                    variant("plms", "plms", 0.005),
                    variant("lmsn", "lmsn", 0.0055)};
    return cfg;
  }
  if (name == "fig2b") {
    ExperimentConfig cfg = sensor_base();
    cfg.shift_kind = "normalized_laplacian";
    cfg.variants = {variant("lms", "lms", 0.004),
                    variant("lmsn", "lmsn", 0.01),
                    variant("plms", "plms", 0.008)};
    return cfg;
  }
  if (name == "fig2c") {
    ExperimentConfig cfg = sensor_base();
    cfg.shift_kind = "adjacency";
    VariantConfig lms = variant("lms", "lms", 0.0);
    lms.mu_rule = "bound_fraction";
    lms.bound_fraction = 0.05;
    cfg.variants = {variant("lmsn", "lmsn", 0.02),
                    variant("plms", "plms", 0.018), lms};
    return cfg;
  }
  if (name == "fig3") {
    ExperimentConfig cfg = sensor_base();
    cfg.order = 3;
    cfg.source = "vertex_correlated";
    cfg.iters = 2000;
    cfg.variants = {variant("lms", "lms", 0.1),
                    variant("lmsn", "lmsn", 0.038),
                    variant("plms", "plms", 0.03)};
    return cfg;
  }
  if (name == "fig4") {
    ExperimentConfig cfg = sensor_base();
    cfg.order = 3;
    cfg.source = "ar";
    cfg.iters = 2000;
    cfg.variants = {variant("lms", "lms", 0.1, 0.1),
                    variant("lmsn", "lmsn", 0.038, 0.1),
                    variant("plms", "plms", 0.03, 0.1)};
    return cfg;
  }
  if (name == "fig5") {
    ExperimentConfig cfg = sensor_base();
    cfg.order = 3;
    cfg.coeff_source = "stages";
    cfg.stages = {three_cluster_stage(0)};
    cfg.clustering = {0.9, 0.01, 0.5, 0.98, true};
    // The clustering scenario works on a single input variance (the
    // explained-variance selection is built on R_zk = sigma^2 P_k).
    cfg.var_low = cfg.var_high = 1.25;
    cfg.runs = 100;
    cfg.iters = 5000;
    cfg.theory_overlay = false;
    cfg.snapshot_iters = {5000};
    VariantConfig raw = variant("clustered_raw", "plms", 0.01, 0.01, "learned");
    raw.mechanism = "raw";
    cfg.variants = {variant("clustered", "plms", 0.01, 0.01, "learned"), raw,
                    variant("oracle", "plms", 0.01, 0.01, "oracle"),
                    variant("global", "plms", 0.01, 0.01, "uniform"),
                    variant("noncoop", "plms", 0.01, 0.01, "identity")};
    return cfg;
  }
  if (name == "fig7") {
    ExperimentConfig cfg = sensor_base();
    cfg.order = 3;
    cfg.coeff_source = "stages";
    StageSpec s0;
    s0.at = 0;
    s0.cluster_ranges = {{1, 30}, {31, 60}};
    s0.cluster_coeffs = {{0.5, 0.4, 0.9}, {0.3, 0.1, 0.4}};
    StageSpec s1;
    s1.at = 1000;
    s1.cluster_ranges = {{1, 30}, {31, 60}};
    s1.cluster_coeffs = {{0.9, 0.3, 0.7}, {0.2, 0.6, 0.5}};
    cfg.stages = {s0, s1};
    cfg.clustering = {0.9, 0.01, 0.5, 0.98, true};
    cfg.var_low = cfg.var_high = 1.25;
    cfg.runs = 100;
    cfg.iters = 2000;
    cfg.theory_overlay = false;
    cfg.variants = {variant("clustered", "plms", 0.01, 0.01, "learned"),
                    variant("oracle", "plms", 0.01, 0.01, "oracle")};
    return cfg;
  }
  if (name == "fig8") {
    // Staged cluster and model changes the online mechanism can follow: a
    // coefficient change on fixed clusters, then a merge with new
    // coefficients. Splitting an established cluster is not recoverable for
    // this trust rule (combined estimates stay within the similarity tube),
    // so the staged scenario exercises the trackable directions.
    ExperimentConfig cfg = sensor_base();
    cfg.order = 3;
    cfg.coeff_source = "stages";
    StageSpec s0;
    s0.at = 0;
    s0.cluster_ranges = {{1, 30}, {31, 60}};
    s0.cluster_coeffs = {{0.6, 0.5, 0.7}, {-0.5, -0.7, 0.4}};
    StageSpec s1;
    s1.at = 1000;
    s1.cluster_ranges = {{1, 30}, {31, 60}};
    s1.cluster_coeffs = {{0.9, 0.2, 0.4}, {-0.2, -0.9, 0.6}};
    StageSpec s2;
    s2.at = 2000;
    s2.cluster_ranges = {{1, 60}};
    s2.cluster_coeffs = {{0.5, 0.8, 0.3}};
    cfg.stages = {s0, s1, s2};
    cfg.clustering = {0.9, 0.01, 0.5, 0.4, true};
    cfg.var_low = cfg.var_high = 1.25;
    cfg.runs = 100;
    cfg.iters = 3000;
    cfg.theory_overlay = false;
    cfg.snapshot_iters = {1000, 2000, 3000};
    cfg.variants = {variant("clustered", "plms", 0.01, 0.01, "learned"),
                    variant("oracle", "plms", 0.01, 0.01, "oracle")};
    return cfg;
  }
  if (name == "table1") {
    ExperimentConfig cfg;
    cfg.variants = {variant("plms", "plms", 1e-4)};
    auto& r = cfg.recon;
    r.readings_file = "data/noaa_readings.csv";
    r.coords_file = "data/noaa_coords.csv";
    r.synthetic = true;  // used when the canonical files are absent
    r.knn_k = 7;
    r.order = 4;
    r.train_fraction = 0.75;
    r.mask_fraction = 0.34;  // 37 of 109 stations
    r.mu = 1e-4;
    r.mu_lms = 1e-5;
    r.algorithms = {"multitask_lms", "multitask_plms", "multitask_lmsn",
                    "singletask_lmsn"};
    return cfg;
  }
  throw config_error("unknown preset name: " + name);
}

namespace {

CombineMode combine_from_string(const std::string& s) {
  if (s == "uniform") return CombineMode::uniform;
  if (s == "identity" || s == "noncoop") return CombineMode::identity;
  if (s == "oracle") return CombineMode::oracle;
  if (s == "learned") return CombineMode::learned;
  throw config_error("unknown combination mode: " + s);
}

std::vector<TruthStage> materialize_stages(const ExperimentConfig& cfg,
                                           int n, CounterRng& setup_rng) {
  std::vector<TruthStage> stages;
  if (cfg.coeff_source == "stages") {
    if (cfg.stages.empty())
      throw config_error("coeff_source = stages needs stage definitions");
    for (const auto& spec : cfg.stages) {
      TruthStage st;
      st.start_iter = spec.at;
      st.bank.resize(n, cfg.order);
      st.cluster_of.assign(n, -1);
      if (spec.cluster_ranges.size() != spec.cluster_coeffs.size())
        throw config_error("stage has mismatched ranges and coefficients");
      for (std::size_t q = 0; q < spec.cluster_ranges.size(); ++q) {
        const auto [a, b] = spec.cluster_ranges[q];
        if (a < 1 || b > n || a > b)
          throw config_error("stage cluster range out of bounds");
        const auto& coeffs = spec.cluster_coeffs[q];
        if (static_cast<int>(coeffs.size()) != cfg.order)
          throw config_error("stage coefficients must have filter order size");
        for (int k = a - 1; k < b; ++k) {
          if (st.cluster_of[k] != -1)
            throw config_error("stage cluster ranges overlap at node " +
                               std::to_string(k + 1));
          st.cluster_of[k] = static_cast<int>(q);
          for (int m = 0; m < cfg.order; ++m) st.bank(k, m) = coeffs[m];
        }
      }
      for (int k = 0; k < n; ++k)
        if (st.cluster_of[k] == -1)
          throw config_error("stage cluster ranges do not cover node " +
                             std::to_string(k + 1));
      stages.push_back(std::move(st));
    }
    if (stages.front().start_iter != 0)
      throw config_error("first stage must start at iteration 0");
    return stages;
  }

  Eigen::VectorXd h(cfg.order);
  if (cfg.coeff_source == "uniform01") {
    for (int m = 0; m < cfg.order; ++m) h[m] = setup_rng.next_double();
  } else if (cfg.coeff_source == "explicit") {
    if (static_cast<int>(cfg.coeffs.size()) != cfg.order)
      throw config_error("filter.coeffs must have filter.order entries");
    for (int m = 0; m < cfg.order; ++m) h[m] = cfg.coeffs[m];
  } else {
    throw config_error("unknown coeff_source: " + cfg.coeff_source);
  }
  TruthStage st;
  st.start_iter = 0;
  st.bank = h.transpose().replicate(n, 1);
  st.cluster_of.assign(n, 0);
  return {st};
}

}  // namespace

Experiment materialize(const ExperimentConfig& cfg) {
  Experiment ex;
  ex.runs = cfg.runs;
  ex.iters = cfg.iters;
  ex.master_seed = cfg.master_seed;
  ex.theory_overlay = cfg.theory_overlay;

  // Graph and shift.
  if (cfg.graph_generator == "erdos_renyi") {
    if (cfg.shift_kind != "normalized_adjacency")
      throw config_error(
          "the erdos_renyi generator defines its own normalized shift; set "
          "shift.kind = normalized_adjacency");
    auto [g, s] = gen_erdos_renyi_thresholded(cfg.n, cfg.graph_seed);
    ex.graph = std::move(g);
    ex.shift = std::move(s);
  } else if (cfg.graph_generator == "knn") {
    ex.graph = gen_knn_sensor(cfg.n, cfg.knn_k, cfg.graph_seed);
    ex.shift = build_shift(ex.graph, shift_kind_from_string(cfg.shift_kind));
  } else if (cfg.graph_generator == "file") {
    ex.graph = load_edge_list(cfg.graph_file, cfg.coords_file);
    ex.shift = build_shift(ex.graph, shift_kind_from_string(cfg.shift_kind));
  } else {
    throw config_error("unknown graph generator: " + cfg.graph_generator);
  }
  const int n = ex.graph.n_nodes;

  // Setup draws are independent of the per-run streams.
  CounterRng setup_rng(cfg.master_seed, 1000);

  Eigen::VectorXd x_var(n);
  for (int k = 0; k < n; ++k)
    x_var[k] = cfg.var_low == cfg.var_high
                   ? cfg.var_low
                   : setup_rng.next_uniform(cfg.var_low, cfg.var_high);
  if (cfg.source == "iid") {
    ex.source = SourceSpec::iid(x_var);
  } else if (cfg.source == "vertex_correlated") {
    if (!ex.shift.s.isApprox(ex.shift.s.transpose(), 1e-12))
      throw config_error("vertex_correlated source needs a symmetric shift");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ex.shift.s);
    ex.source = SourceSpec::vertex_correlated(x_var, es.eigenvectors());
  } else if (cfg.source == "ar") {
    if (spectral_radius(ex.shift.s) >= 1.0)
      throw config_error("ar source needs rho(S) < 1; pick a normalized shift");
    ex.source = SourceSpec::ar(ex.shift);
  } else {
    throw config_error("unknown signal source: " + cfg.source);
  }

  Eigen::VectorXd v_var(n);
  for (int k = 0; k < n; ++k)
    v_var[k] = cfg.noise_var_low == cfg.noise_var_high
                   ? cfg.noise_var_low
                   : setup_rng.next_uniform(cfg.noise_var_low,
                                            cfg.noise_var_high);
  ex.noise_variances = v_var;

  ex.stages = materialize_stages(cfg, n, setup_rng);
  for (std::size_t i = 0; i < ex.stages.size(); ++i)
    if (ex.stages[i].start_iter < 0 ||
        (i > 0 && ex.stages[i].start_iter <= ex.stages[i - 1].start_iter))
      throw config_error("stage starts must be increasing and nonnegative");

  if (cfg.variants.empty())
    throw config_error("no algorithm variants configured");

  const SignalStatistics stats = make_stats(ex.source, ex.shift);
  for (const auto& vc : cfg.variants) {
    MaterializedVariant mv;
    mv.label = vc.label;
    mv.sim.algorithm = algorithm_from_string(vc.algorithm);
    mv.sim.epsilon = vc.epsilon;
    mv.sim.hessian_mu = vc.hessian_mu;
    mv.sim.combine = combine_from_string(vc.combination);
    mv.sim.clustering = cfg.clustering;
    mv.sim.clustering.normalized = vc.mechanism != "raw";
    mv.sim.iters = cfg.iters;
    mv.sim.stages = ex.stages;
    if (vc.mu_rule == "uniform") {
      mv.sim.mu = Eigen::VectorXd::Constant(n, vc.mu);
    } else if (vc.mu_rule == "bound_fraction") {
      mv.sim.mu.resize(n);
      for (int k = 0; k < n; ++k) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            local_covariance(ex.shift, stats, k, cfg.order),
            Eigen::EigenvaluesOnly);
        mv.sim.mu[k] =
            vc.bound_fraction * 2.0 / es.eigenvalues().maxCoeff();
      }
    } else {
      throw config_error("unknown mu_rule: " + vc.mu_rule);
    }

    mv.theory_applicable =
        ex.stages.size() == 1 &&
        (mv.sim.algorithm == AlgorithmKind::lms ||
         mv.sim.algorithm == AlgorithmKind::plms) &&
        mv.sim.combine != CombineMode::learned;
    if (mv.theory_applicable && mv.sim.algorithm == AlgorithmKind::plms) {
      const Eigen::MatrixXd p = compute_preconditioner(ex.shift, cfg.order);
      for (int k = 0; k < n; ++k)
        mv.d_blocks.push_back(Eigen::MatrixXd(
            d_matrix(p.row(k).transpose(), vc.epsilon).asDiagonal()));
    }
    ex.variants.push_back(std::move(mv));
  }

  for (int node : cfg.trace_nodes) {
    if (node < 1 || node > n)
      throw config_error("trace node out of range: " + std::to_string(node));
    ex.probes.trace_nodes.push_back(node - 1);
  }
  ex.probes.snapshot_iters = cfg.snapshot_iters;
  return ex;
}

McResult run_monte_carlo(const Graph& g, const ShiftMatrix& s,
                         const SimConfig& sim, const SourceSpec& source,
                         const Eigen::VectorXd& noise_variances, int runs,
                         std::uint64_t master_seed, const SimProbes& probes) {
  if (runs < 1) throw precondition_error("run_monte_carlo: runs >= 1");
  std::vector<Eigen::VectorXd> curves(runs);
  std::vector<char> diverged(runs, 0);

  McResult out;
  {
    SimOutputs run0 = simulate_run(g, s, sim, source, noise_variances,
                                   derive_seed(master_seed, 0), probes);
    diverged[0] = run0.diverged;
    curves[0] = run0.msd;
    out.run0 = std::move(run0);
  }

  std::atomic<int> next{1};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers =
      static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(runs)));
  auto worker = [&]() {
    for (int r = next.fetch_add(1); r < runs; r = next.fetch_add(1)) {
      SimOutputs res = simulate_run(g, s, sim, source, noise_variances,
                                    derive_seed(master_seed, r));
      diverged[r] = res.diverged;
      curves[r] = std::move(res.msd);
    }
  };
  if (workers > 1) {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  } else {
    worker();
  }

  // Fixed reduction order: by run index.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(sim.iters + 1);
  int completed = 0;
  for (int r = 0; r < runs; ++r) {
    if (diverged[r]) {
      out.diverged_runs.push_back(r);
      continue;
    }
    sum += curves[r];
    ++completed;
  }
  if (completed == 0)
    throw numeric_error("run_monte_carlo: every run diverged");
  out.msd = sum / completed;
  return out;
}

TheoryModel variant_theory_model(const Experiment& ex,
                                 const MaterializedVariant& v) {
  if (!v.theory_applicable)
    throw precondition_error("variant_theory_model: theory not applicable");
  const int n = ex.graph.n_nodes;
  const int order = static_cast<int>(ex.stages.front().bank.cols());
  Eigen::MatrixXd a;
  switch (v.sim.combine) {
    case CombineMode::uniform:
      a = build_combination_matrix(neighborhoods(ex.graph));
      break;
    case CombineMode::identity:
      a = Eigen::MatrixXd::Identity(n, n);
      break;
    case CombineMode::oracle:
      a = oracle_combination(ex.graph, ex.stages.front().cluster_of);
      break;
    case CombineMode::learned:
      throw precondition_error("variant_theory_model: learned clustering");
  }
  Eigen::VectorXd h0(n * order);
  for (int k = 0; k < n; ++k)
    h0.segment(k * order, order) = ex.stages.front().bank.row(k).transpose();
  return build_theory_model(ex.shift, a, v.sim.mu, v.d_blocks,
                            make_stats(ex.source, ex.shift),
                            NoiseModel{ex.noise_variances}, h0, order);
}

}  // namespace gdlms
