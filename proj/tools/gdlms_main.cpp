#include <CLI11.hpp>
#include <iostream>

#include "gdlms/errors.hpp"
#include "gdlms/harness.hpp"

namespace {

gdlms::ExperimentConfig load_config(const std::string& arg) {
  // Accept either a config file path or a preset name.
  for (const auto& name : gdlms::preset_names())
    if (arg == name) return gdlms::preset(arg);
  return gdlms::parse_config_file(arg);
}

void apply_overrides(gdlms::ExperimentConfig& cfg, std::int64_t seed,
                     int runs, int iters) {
  if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
  if (runs > 0) cfg.runs = runs;
  if (iters > 0) cfg.iters = iters;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online distributed estimation of graph-filter coefficients"};
  app.require_subcommand(1);

  std::string config_arg;
  std::string out_dir = "out";
  std::int64_t seed = -1;
  int runs = 0;
  int iters = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_arg, "config file or preset name")
        ->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "master seed override");
    cmd->add_option("--runs", runs, "Monte-Carlo runs override");
    cmd->add_option("--iters", iters, "iteration count override");
  };

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Monte-Carlo MSD curves (theory overlay when applicable)");
  add_common(simulate);
  CLI::App* theory =
      app.add_subcommand("theory", "closed-form MSD predictions only");
  add_common(theory);
  CLI::App* cluster = app.add_subcommand(
      "cluster", "simulate and write cluster-matrix snapshots");
  add_common(cluster);
  CLI::App* reconstruct = app.add_subcommand(
      "reconstruct", "temperature-reconstruction experiment");
  add_common(reconstruct);

  CLI::App* preset_cmd =
      app.add_subcommand("preset", "inspect or export a named preset");
  std::string preset_name;
  std::string emit_path;
  preset_cmd->add_option("name", preset_name, "preset name")->required();
  preset_cmd->add_option("--emit-config", emit_path,
                         "write the preset as a config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (preset_cmd->parsed()) {
      const gdlms::ExperimentConfig cfg = gdlms::preset(preset_name);
      if (!emit_path.empty()) {
        gdlms::emit_config(cfg, emit_path);
        std::cout << "wrote " << emit_path << "\n";
      } else {
        std::cout << "preset " << preset_name << ": " << cfg.variants.size()
                  << " variant(s), n = " << cfg.n << ", order = " << cfg.order
                  << ", runs = " << cfg.runs << ", iters = " << cfg.iters
                  << "\n";
      }
      return 0;
    }

    gdlms::ExperimentConfig cfg = load_config(config_arg);
    apply_overrides(cfg, seed, runs, iters);
    if (simulate->parsed()) return gdlms::cmd_simulate(cfg, out_dir, false);
    if (theory->parsed()) return gdlms::cmd_theory(cfg, out_dir);
    if (cluster->parsed()) return gdlms::cmd_simulate(cfg, out_dir, true);
    if (reconstruct->parsed()) return gdlms::cmd_reconstruct(cfg, out_dir);
  } catch (const gdlms::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const gdlms::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
