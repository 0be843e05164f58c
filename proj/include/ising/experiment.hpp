#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"

#include "ising/criticality.hpp"
#include "ising/degree_models.hpp"
#include "ising/observables.hpp"
#include "ising/oracle.hpp"

namespace ising::cli {

// Exit-code contract: 0 success, 1 oracle check failure, 2 sweep with
// per-point failures, 3 fit rejected, 4 configuration/usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOracleFailure = 1;
inline constexpr int kExitSweepPartial = 2;
inline constexpr int kExitFitRejected = 3;
inline constexpr int kExitConfigError = 4;

struct ExperimentConfig {
  nlohmann::json raw;
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);

  DegreeModel model() const;
  SolverConfig solver() const;
  SweepConfig sweep() const;
  std::vector<std::pair<double, double>> sweep_grid() const;
  ExponentFitConfig exponents() const;
  std::vector<std::string> exponent_fits() const;
  oracle::OracleSuiteConfig oracle_suite() const;
  std::optional<std::string> oracle_enumerate_file() const;

  std::string provenance() const;  // "ising_cavity <version> config=<hash> seed=<seed>"
  std::uint64_t config_hash() const;
};

DegreeModel model_from_json(const nlohmann::json& j);

nlohmann::json fit_to_json(const ExponentFit& fit);

int cmd_critical(const ExperimentConfig& cfg, std::ostream& out);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out);
int cmd_exponents(const ExperimentConfig& cfg, std::ostream& out);
int cmd_oracle(const ExperimentConfig& cfg, std::ostream& out);

/// Pure helper used by the determinism tests: the exact CSV a sweep command
/// would write for this config.
std::string sweep_csv_for_config(const ExperimentConfig& cfg);

}  // namespace ising::cli
