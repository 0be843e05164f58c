#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ising/cavity.hpp"
#include "ising/degree_models.hpp"
#include "ising/observables.hpp"

namespace ising {

/// beta_c = atanh(1/nu); 0 when nu = inf, +inf sentinel when nu <= 1
/// (subcritical branching, no transition).
double critical_beta(const ForwardModel& fm);

struct FitPoint {
  double param = 0.0;  // eps = beta - beta_c (or beta_c - beta), or B
  double x = 0.0;      // regressor actually used
  double y = 0.0;      // log of the observable
  double y_se = 0.0;
  double value = 0.0;  // observable on the linear scale
  double value_se = 0.0;
  double extrap_residual = 0.0;
};

struct ExponentFit {
  std::string exponent_name;
  double estimate = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  double r_squared = 0.0;
  std::pair<double, double> window{0.0, 0.0};
  bool log_correction = false;
  int points_used = 0;
  int unconverged_solves = 0;  // solver hit max_iters while collecting points
  double amplitude = 0.0;      // exp(intercept) of the log-log fit
  std::vector<FitPoint> points;

  // gamma: measured limiting constant lim (beta_c - beta) * chi and the two
  // reference formulas (stated and the one implied by the closed form).
  double limit_constant = std::nan("");
  double limit_constant_stated = std::nan("");
  double limit_constant_closed_form = std::nan("");

  // gamma': exploratory plateau (beta_hat*nu - 1) * chi per point and the
  // conjectured E[D]/(2 nu) value.
  std::vector<std::pair<double, double>> plateau;
  double plateau_conjecture = std::nan("");
  std::string note;
};

struct ExponentFitConfig {
  SolverConfig solver;
  std::size_t n_mag = 100'000;
  std::size_t n_spines = 100'000;
  int n_points = 12;

  // beta fit: eps window and the geometric B grid for the B -> 0 limit.
  double eps_min = std::pow(10.0, -2.5);
  double eps_max = 0.1;
  std::vector<double> B_grid = {1e-4, 1e-5, 1e-6, 1e-7, 1e-8};

  // delta fit: B window at beta = beta_c.
  double delta_B_min = 1e-4;
  double delta_B_max = 1e-2;

  // gamma fit: beta_c - beta window (closed form, noise-free).
  double gamma_eps_min = 1e-4;
  double gamma_eps_max = 1e-2;

  // gamma' diagnostic: beta - beta_c window and the small probe field.
  double gp_eps_min = 1e-2;
  double gp_eps_max = 1e-1;
  int gp_points = 8;
  double gp_field = 1e-6;

  bool log_correction = false;
  double r2_min = 0.98;
  bool reject_below_r2 = true;  // set false to obtain the fit regardless
};

ExponentFit fit_exponent_beta(const DegreeModel& model, const ForwardModel& fm,
                              const ExponentFitConfig& cfg);
ExponentFit fit_exponent_delta(const DegreeModel& model, const ForwardModel& fm,
                               const ExponentFitConfig& cfg);
ExponentFit fit_exponent_gamma(const DegreeModel& model, const ForwardModel& fm,
                               const ExponentFitConfig& cfg);
ExponentFit gamma_prime_diagnostic(const DegreeModel& model, const ForwardModel& fm,
                                   const ExponentFitConfig& cfg);

}  // namespace ising
