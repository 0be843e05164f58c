#include "ising/criticality.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace ising {

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r2 = 0.0;
};

// Weighted least squares of y on x. If y_se entries are positive they define
// the weights and the slope variance picks up max(1, chi2/dof); otherwise
// ordinary least squares with residual-based errors.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& y_se) {
  const std::size_t n = x.size();
  if (n < 3) throw std::invalid_argument("fit_line: need at least 3 points");
  std::vector<double> w(n, 1.0);
  bool weighted = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < y_se.size() && y_se[i] > 0.0) {
      w[i] = 1.0 / (y_se[i] * y_se[i]);
      weighted = true;
    }
  }
  double sw = 0.0, swx = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
  }
  const double xbar = swx / sw, ybar = swy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
    sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = ybar - f.slope * xbar;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += w[i] * r * r;
    ss_tot += w[i] * (y[i] - ybar) * (y[i] - ybar);
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  const double dof = static_cast<double>(n - 2);
  if (weighted) {
    f.slope_se = std::sqrt(std::max(1.0, ss_res / dof) / sxx);
  } else {
    f.slope_se = std::sqrt((ss_res / dof) / sxx);
  }
  return f;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("log_grid: bad window");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double step = (std::log(hi) - std::log(lo)) / (n - 1);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + step * i);
  return g;
}

void check_r2(const LineFit& f, const ExponentFitConfig& cfg, const std::string& name) {
  if (cfg.reject_below_r2 && f.r2 < cfg.r2_min) {
    std::ostringstream os;
    os << name << ": fit rejected, r^2 = " << f.r2 << " < " << cfg.r2_min;
    throw FitRejected(os.str(), f.r2);
  }
}

}  // namespace

double critical_beta(const ForwardModel& fm) {
  const double nu = fm.nu();
  if (!std::isfinite(nu)) return 0.0;
  if (nu <= 1.0) return std::numeric_limits<double>::infinity();
  return std::atanh(1.0 / nu);
}

ExponentFit fit_exponent_beta(const DegreeModel& model, const ForwardModel& fm,
                              const ExponentFitConfig& cfg) {
  const double bc = critical_beta(fm);
  if (!std::isfinite(bc) || bc <= 0.0) {
    throw std::invalid_argument("fit_exponent_beta: beta_c must be finite and positive");
  }
  auto fm_ptr = std::make_shared<const ForwardModel>(fm);
  std::vector<double> eps = log_grid(cfg.eps_min, cfg.eps_max, cfg.n_points);
  std::sort(eps.rbegin(), eps.rend());  // large eps first: fast solves seed slow ones
  std::vector<double> B_grid = cfg.B_grid;
  std::sort(B_grid.rbegin(), B_grid.rend());
  if (B_grid.size() < 2) throw std::invalid_argument("fit_exponent_beta: need >= 2 B values");

  ExponentFit out;
  out.exponent_name = "beta";
  out.log_correction = cfg.log_correction;
  out.window = {cfg.eps_min, cfg.eps_max};

  std::vector<double> warm;
  std::vector<double> xs, ys, yse;
  std::uint64_t point_id = 0;
  for (double e : eps) {
    std::vector<double> m_of_b, se_of_b;
    for (double B : B_grid) {
      IsingParams params(bc + e, B);
      SolverConfig solver = cfg.solver;
      solver.seed = derive_key(cfg.solver.seed, Stream::Generic, 0xb0, point_id++);
      CavityPopulation pop = fixed_point(fm_ptr, params, solver, Init::Free,
                                         warm.size() == solver.population_size ? &warm : nullptr);
      warm = pop.samples;
      if (!pop.converged) ++out.unconverged_solves;
      const ValueSE m = magnetization(model, pop, cfg.n_mag, solver.seed);
      m_of_b.push_back(m.value);
      se_of_b.push_back(m.se);
    }
    // Linear-in-B extrapolation from the two smallest fields (Richardson on
    // the geometric grid); the residual against the smallest-B value is kept
    // as a diagnostic.
    const std::size_t nb = m_of_b.size();
    const double b1 = B_grid[nb - 1], b2 = B_grid[nb - 2];
    const double m1 = m_of_b[nb - 1], m2 = m_of_b[nb - 2];
    const double f = b1 / (b2 - b1);
    const double m0 = m1 + (m1 - m2) * f;
    const double se0 = std::sqrt((1.0 + f) * (1.0 + f) * se_of_b[nb - 1] * se_of_b[nb - 1] +
                                 f * f * se_of_b[nb - 2] * se_of_b[nb - 2]);
    FitPoint pt;
    pt.param = e;
    pt.value = m0;
    pt.value_se = se0;
    pt.extrap_residual = std::abs(m0 - m1);
    pt.x = cfg.log_correction ? std::log(e / std::log(1.0 / e)) : std::log(e);
    if (!(m0 > 0.0)) {
      throw FitRejected("fit_exponent_beta: nonpositive extrapolated magnetization", 0.0);
    }
    pt.y = std::log(m0);
    pt.y_se = se0 / m0;
    out.points.push_back(pt);
    xs.push_back(pt.x);
    ys.push_back(pt.y);
    yse.push_back(pt.y_se);
  }
  const LineFit f = fit_line(xs, ys, yse);
  check_r2(f, cfg, "fit_exponent_beta");
  out.estimate = f.slope;
  out.ci95 = {f.slope - 1.96 * f.slope_se, f.slope + 1.96 * f.slope_se};
  out.r_squared = f.r2;
  out.amplitude = std::exp(f.intercept);
  out.points_used = static_cast<int>(xs.size());
  return out;
}

ExponentFit fit_exponent_delta(const DegreeModel& model, const ForwardModel& fm,
                               const ExponentFitConfig& cfg) {
  const double bc = critical_beta(fm);
  if (!std::isfinite(bc) || bc <= 0.0) {
    throw std::invalid_argument("fit_exponent_delta: beta_c must be finite and positive");
  }
  auto fm_ptr = std::make_shared<const ForwardModel>(fm);
  std::vector<double> B_grid = log_grid(cfg.delta_B_min, cfg.delta_B_max, cfg.n_points);
  std::sort(B_grid.rbegin(), B_grid.rend());

  ExponentFit out;
  out.exponent_name = "delta";
  out.log_correction = cfg.log_correction;
  out.window = {cfg.delta_B_min, cfg.delta_B_max};

  std::vector<double> warm;
  std::vector<double> xs, ys, yse;
  std::uint64_t point_id = 0;
  for (double B : B_grid) {
    IsingParams params(bc, B);
    SolverConfig solver = cfg.solver;
    solver.seed = derive_key(cfg.solver.seed, Stream::Generic, 0xd0, point_id++);
    CavityPopulation pop = fixed_point(fm_ptr, params, solver, Init::Free,
                                       warm.size() == solver.population_size ? &warm : nullptr);
    warm = pop.samples;
    if (!pop.converged) ++out.unconverged_solves;
    const ValueSE m = magnetization(model, pop, cfg.n_mag, solver.seed);
    if (!(m.value > 0.0)) throw FitRejected("fit_exponent_delta: nonpositive magnetization", 0.0);
    FitPoint pt;
    pt.param = B;
    pt.value = m.value;
    pt.value_se = m.se;
    pt.x = cfg.log_correction ? std::log(B / std::log(1.0 / B)) : std::log(B);
    pt.y = std::log(m.value);
    pt.y_se = m.se / m.value;
    out.points.push_back(pt);
    xs.push_back(pt.x);
    ys.push_back(pt.y);
    yse.push_back(pt.y_se);
  }
  const LineFit f = fit_line(xs, ys, yse);
  check_r2(f, cfg, "fit_exponent_delta");
  // The regression estimates 1/delta.
  out.estimate = 1.0 / f.slope;
  const double lo = f.slope - 1.96 * f.slope_se, hi = f.slope + 1.96 * f.slope_se;
  out.ci95 = {1.0 / hi, 1.0 / lo};
  if (out.ci95.first > out.ci95.second) std::swap(out.ci95.first, out.ci95.second);
  out.r_squared = f.r2;
  out.amplitude = std::exp(f.intercept);
  out.points_used = static_cast<int>(xs.size());
  return out;
}

ExponentFit fit_exponent_gamma(const DegreeModel& model, const ForwardModel& fm,
                               const ExponentFitConfig& cfg) {
  const double bc = critical_beta(fm);
  if (!std::isfinite(bc) || bc <= 0.0) {
    throw std::invalid_argument("fit_exponent_gamma: beta_c must be finite and positive");
  }
  std::vector<double> eps = log_grid(cfg.gamma_eps_min, cfg.gamma_eps_max, cfg.n_points);

  ExponentFit out;
  out.exponent_name = "gamma";
  out.window = {cfg.gamma_eps_min, cfg.gamma_eps_max};

  std::vector<double> xs, ys;
  for (double e : eps) {
    IsingParams params(bc - e, 0.0);
    const double chi = susceptibility_subcritical(model, fm, params);
    FitPoint pt;
    pt.param = e;
    pt.value = chi;
    pt.x = std::log(e);
    pt.y = std::log(chi);
    out.points.push_back(pt);
    xs.push_back(pt.x);
    ys.push_back(pt.y);
  }
  const LineFit f = fit_line(xs, ys, {});
  check_r2(f, cfg, "fit_exponent_gamma");
  out.estimate = -f.slope;
  out.ci95 = {-f.slope - 1.96 * f.slope_se, -f.slope + 1.96 * f.slope_se};
  out.r_squared = f.r2;
  out.amplitude = std::exp(f.intercept);
  out.points_used = static_cast<int>(xs.size());

  // Limiting constant lim (beta_c - beta) chi(beta, 0+), evaluated deep in
  // the asymptotic regime of the closed form, against both references.
  const double probe = 1e-8;
  out.limit_constant =
      probe * susceptibility_subcritical(model, fm, IsingParams(bc - probe, 0.0));
  const double bhc = 1.0 / fm.nu();
  out.limit_constant_stated = model.mean() * bhc / (1.0 - bhc * bhc);
  out.limit_constant_closed_form = model.mean() * bhc * bhc / (1.0 - bhc * bhc);
  return out;
}

ExponentFit gamma_prime_diagnostic(const DegreeModel& model, const ForwardModel& fm,
                                   const ExponentFitConfig& cfg) {
  const double bc = critical_beta(fm);
  if (!std::isfinite(bc) || bc <= 0.0) {
    throw std::invalid_argument("gamma_prime_diagnostic: beta_c must be finite and positive");
  }
  auto fm_ptr = std::make_shared<const ForwardModel>(fm);
  std::vector<double> gaps = log_grid(cfg.gp_eps_min, cfg.gp_eps_max, cfg.gp_points);
  std::sort(gaps.rbegin(), gaps.rend());

  ExponentFit out;
  out.exponent_name = "gamma_prime_lb";
  out.window = {cfg.gp_eps_min, cfg.gp_eps_max};
  out.note = "EXPLORATORY: plateau compares (beta_hat*nu-1)*chi to the conjectured E[D]/(2 nu)";
  out.plateau_conjecture = model.mean() / (2.0 * fm.nu());

  std::vector<double> warm;
  std::vector<double> xs, ys, yse;
  std::uint64_t point_id = 0;
  for (double gap : gaps) {
    IsingParams params(bc + gap, cfg.gp_field);
    SolverConfig solver = cfg.solver;
    solver.seed = derive_key(cfg.solver.seed, Stream::Generic, 0xa0, point_id++);
    CavityPopulation pop = fixed_point(fm_ptr, params, solver, Init::Free,
                                       warm.size() == solver.population_size ? &warm : nullptr);
    warm = pop.samples;
    if (!pop.converged) ++out.unconverged_solves;
    const ChiEstimate chi =
        susceptibility_path_mc(model, fm, pop, params, 0, cfg.n_spines, solver.seed);
    FitPoint pt;
    pt.param = gap;
    pt.value = chi.value;
    pt.value_se = chi.se;
    pt.x = std::log(gap);
    pt.y = std::log(chi.value);
    pt.y_se = chi.se / chi.value;
    out.points.push_back(pt);
    xs.push_back(pt.x);
    ys.push_back(pt.y);
    yse.push_back(pt.y_se);
    out.plateau.emplace_back(gap, (params.beta_hat * fm.nu() - 1.0) * chi.value);
  }
  const LineFit f = fit_line(xs, ys, yse);
  check_r2(f, cfg, "gamma_prime_diagnostic");
  out.estimate = f.slope;  // expected close to -1
  out.ci95 = {f.slope - 1.96 * f.slope_se, f.slope + 1.96 * f.slope_se};
  out.r_squared = f.r2;
  out.amplitude = std::exp(f.intercept);
  out.points_used = static_cast<int>(xs.size());
  return out;
}

}  // namespace ising
