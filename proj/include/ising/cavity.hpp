#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "ising/common.hpp"
#include "ising/degree_models.hpp"
#include "ising/rng.hpp"

namespace ising {

/// Inverse temperature, its tanh, and the external field.
struct IsingParams {
  double beta = 0.0;
  double beta_hat = 0.0;  // tanh(beta)
  double field_B = 0.0;

  IsingParams() = default;
  IsingParams(double beta_, double B_) : beta(beta_), beta_hat(std::tanh(beta_)), field_B(B_) {
    if (!(beta_ >= 0.0)) throw std::invalid_argument("IsingParams: beta must be >= 0");
    if (!(B_ >= 0.0)) throw std::invalid_argument("IsingParams: field B must be >= 0");
  }
};

/// Saturation sentinel realizing the h = +infinity ("plus") boundary value.
inline constexpr double kPlusSentinel = std::numeric_limits<double>::infinity();

/// Field propagation along one edge: xi(h) = atanh(beta_hat * tanh h).
/// Computed in log1p form, atanh(t) = log1p(2t/(1-t))/2, which stays accurate
/// for t near +-1; the sentinel maps to exactly beta.
inline double xi(const IsingParams& p, double h) {
  if (std::isinf(h)) return p.beta;
  const double t = p.beta_hat * std::tanh(h);
  return 0.5 * std::log1p(2.0 * t / (1.0 - t));
}

enum class Init { Free, Plus };

struct SolverConfig {
  std::size_t population_size = 200'000;
  int max_iters = 2000;
  int window = 10;          // iterations per comparison window
  double tol = 1e-4;        // relative change of windowed E[xi(h)]
  double ks_conv_tol = 0.005;  // KS guard between populations `window` apart
  double ks_tol = 0.01;     // free/plus agreement tolerance
  bool check_uniqueness = false;
  std::uint64_t seed = 0;
};

/// Empirical sample of the cavity-field distribution h(beta, B).
struct CavityPopulation {
  std::vector<double> samples;
  std::vector<double> xi_samples;  // xi applied to samples, for cheap resampling
  IsingParams params;
  std::shared_ptr<const ForwardModel> model;
  int iterations = 0;
  Init init = Init::Free;
  bool converged = false;
  std::vector<double> exi_trace;   // E[xi(h^{(t)})] per pre-update state
  std::int64_t capped_offspring = 0;
  double exi_value = 0.0;          // E[xi(h)] of the current state

  double exi() const { return exi_value; }
};

CavityPopulation make_population(std::shared_ptr<const ForwardModel> model,
                                 const IsingParams& params, std::size_t size, Init init);

/// Applies `steps` population-dynamics updates in place. Each new sample i of
/// iteration t draws from the counter substream (seed, t, i), so the result
/// depends only on (seed, population size), never on the worker count.
void evolve(CavityPopulation& pop, int steps, std::uint64_t seed);

/// Iterates to the distributional fixed point for B > 0. When warm_start is
/// given it seeds the initial population (size must match cfg).
CavityPopulation fixed_point(const std::shared_ptr<const ForwardModel>& model,
                             const IsingParams& params, const SolverConfig& cfg,
                             Init init = Init::Free,
                             const std::vector<double>* warm_start = nullptr);

struct MomentEstimate {
  double value = 0.0;
  double se = 0.0;
};

struct PopulationMoments {
  MomentEstimate exi, exi2, exi3, eh, eh2;
};

/// Plug-in empirical moments of xi(h) and h with jackknife standard errors.
PopulationMoments moments(const CavityPopulation& pop);

}  // namespace ising
