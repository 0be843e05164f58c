#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "ising/common.hpp"
#include "ising/experiment.hpp"

namespace {

int resolve_workers(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("ISING_CAVITY_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical behavior of the ferromagnetic Ising model on random trees "
               "and locally tree-like random graphs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  int workers = 0;

  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--seed", seed_override, "override the config seed")
      ->each([&seed_given](const std::string&) { seed_given = true; });
  app.add_option("--workers", workers, "worker threads (env ISING_CAVITY_WORKERS as fallback)");
  app.add_option("--out", out_dir, "output directory (overrides config)");

  auto* critical = app.add_subcommand("critical", "print nu, nu_2, nu_3 and beta_c");
  auto* sweep = app.add_subcommand("sweep", "run a (beta, B) thermodynamic sweep to CSV");
  auto* exponents = app.add_subcommand("exponents", "fit critical exponents to JSON");
  auto* oracle_cmd = app.add_subcommand("oracle", "run the exact-oracle equivalence suite");

  CLI11_PARSE(app, argc, argv);

  ising::set_default_workers(resolve_workers(workers));

  try {
    auto cfg = ising::cli::ExperimentConfig::from_file(config_path);
    if (seed_given) {
      cfg.seed = seed_override;
      cfg.raw["seed"] = seed_override;
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    if (critical->parsed()) return ising::cli::cmd_critical(cfg, std::cout);
    if (sweep->parsed()) return ising::cli::cmd_sweep(cfg, std::cout);
    if (exponents->parsed()) return ising::cli::cmd_exponents(cfg, std::cout);
    if (oracle_cmd->parsed()) return ising::cli::cmd_oracle(cfg, std::cout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ising::cli::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return ising::cli::kExitConfigError;
}
