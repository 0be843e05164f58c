#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ising/cavity.hpp"
#include "ising/degree_models.hpp"

namespace ising {

enum class ChiMethod { ClosedFormSubcritical, PathMC, Failed };

std::string to_string(ChiMethod m);

struct ValueSE {
  double value = 0.0;
  double se = 0.0;
  bool warned = false;  // set when the population had not converged
};

/// Monte Carlo estimate of M = E[tanh(B + sum_{i<=D} xi(h_i))] with the h_i
/// resampled from the population; jackknife standard error.
ValueSE magnetization(const DegreeModel& model, const CavityPopulation& pop, std::size_t n,
                      std::uint64_t seed);

/// Exact closed form chi(beta, 0+) = 1 + E[D] beta_hat / (1 - nu beta_hat);
/// requires beta_hat * nu < 1 and nu finite.
double susceptibility_subcritical(const DegreeModel& model, const ForwardModel& fm,
                                  const IsingParams& params);

struct ChiEstimate {
  double value = 0.0;
  double se = 0.0;
  double trunc_bound = 0.0;  // geometric bound (subcritical) or empirical tail estimate
  int ell_max = 0;
  double max_weight = 0.0;   // largest spine weight encountered; must be <= 1
};

/// Spine representation of the susceptibility: depth-stratified sampling of
/// size-biased spines with fields resampled from the population. ell_max = 0
/// selects the default truncation rule.
ChiEstimate susceptibility_path_mc(const DegreeModel& model, const ForwardModel& fm,
                                   const CavityPopulation& pop, const IsingParams& params,
                                   int ell_max, std::size_t n_spines, std::uint64_t seed);

struct ThermoPoint {
  double beta = 0.0;
  double field_B = 0.0;
  double M = 0.0, M_se = 0.0;
  double chi = 0.0, chi_se = 0.0;
  ChiMethod chi_method = ChiMethod::Failed;
  double trunc_bound = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  bool converged = false;
  bool warm_started = false;
  std::string error;  // nonempty when the point failed
};

struct SweepConfig {
  SolverConfig solver;
  std::size_t n_mag = 100'000;
  std::size_t n_spines = 100'000;
  int ell_max = 0;  // 0 = automatic truncation rule
  bool warm_start = true;
};

/// One ThermoPoint per (beta, B) grid entry; per-point failures are recorded
/// inline and the sweep continues.
std::vector<ThermoPoint> thermo_sweep(const DegreeModel& model, const ForwardModel& fm,
                                      const std::vector<std::pair<double, double>>& grid,
                                      const SweepConfig& cfg);

/// CSV serialization with the fixed column order
/// beta,B,M,M_se,chi,chi_se,chi_method,trunc_bound,seed (17 significant digits).
std::string thermo_csv(const std::vector<ThermoPoint>& points, const std::string& provenance);

}  // namespace ising
