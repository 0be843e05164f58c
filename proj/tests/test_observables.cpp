#include "doctest.h"

#include <cmath>

#include "ising/observables.hpp"

using namespace ising;

namespace {

std::shared_ptr<const ForwardModel> fwd(const DegreeModel& m) {
  return std::make_shared<const ForwardModel>(m);
}

double regular_tree_field(int d, const IsingParams& p) {
  double lo = 0.0, hi = 50.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid - p.field_B - (d - 1) * xi(p, mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

CavityPopulation solved(const DegreeModel& m, double beta, double B, std::size_t pop,
                        std::uint64_t seed) {
  SolverConfig cfg;
  cfg.population_size = pop;
  cfg.seed = seed;
  return fixed_point(fwd(m), IsingParams(beta, B), cfg);
}

}  // namespace

TEST_CASE("magnetization: exact and oracle-checked cases") {
  const auto reg = DegreeModel::regular(3);
  {
    // beta = 0: every draw is exactly tanh(B)
    auto pop = solved(reg, 0.0, 0.2, 2000, 3);
    const auto m = magnetization(reg, pop, 5000, 17);
    CHECK(m.value == doctest::Approx(std::tanh(0.2)).epsilon(1e-15));
    CHECK(m.se == doctest::Approx(0.0));
  }
  {
    // supercritical regular tree vs the scalar bisection oracle
    const IsingParams p(0.7, 1e-8);
    auto pop = solved(reg, 0.7, 1e-8, 2000, 4);
    const double h_star = regular_tree_field(3, p);
    const double want = std::tanh(p.field_B + 3.0 * xi(p, h_star));
    const auto m = magnetization(reg, pop, 5000, 18);
    CHECK(std::abs(m.value - want) < 3.0 * m.se + 1e-8);
  }
  {
    // subcritical: M vanishes at the B scale, M <= B(1 + bh E[D]/(1 - bh nu))
    const auto poi = DegreeModel::poisson(3.0);
    const ForwardModel fm(poi);
    const IsingParams p(0.3, 1e-8);
    auto pop = solved(poi, 0.3, 1e-8, 20'000, 5);
    const auto m = magnetization(poi, pop, 20'000, 19);
    const double bound =
        p.field_B * (1.0 + p.beta_hat * poi.mean() / (1.0 - p.beta_hat * fm.nu()));
    CHECK(m.value <= bound + 3.0 * m.se);
    CHECK(m.value >= 0.0);
  }
  auto pop = solved(reg, 0.2, 0.01, 1000, 6);
  CHECK_THROWS_AS(magnetization(reg, pop, 10, 1), std::invalid_argument);
}

TEST_CASE("subcritical susceptibility closed form") {
  const auto reg = DegreeModel::regular(3);
  const ForwardModel fm(reg);
  CHECK(susceptibility_subcritical(reg, fm, IsingParams(0.0, 0.0)) == doctest::Approx(1.0));
  // direct arithmetic: 1 + 3 tanh(0.2) / (1 - 2 tanh(0.2))
  CHECK(susceptibility_subcritical(reg, fm, IsingParams(0.2, 0.0)) ==
        doctest::Approx(1.978317368422772).epsilon(1e-12));
  CHECK_THROWS_AS(susceptibility_subcritical(reg, fm, IsingParams(0.7, 0.0)),
                  std::invalid_argument);
  const ForwardModel heavy(DegreeModel::power_law(2.5, 1));
  CHECK_THROWS_AS(
      susceptibility_subcritical(DegreeModel::power_law(2.5, 1), heavy, IsingParams(0.1, 0.0)),
      std::invalid_argument);
}

TEST_CASE("path-MC susceptibility") {
  const auto reg = DegreeModel::regular(3);
  const ForwardModel fm(reg);
  {
    // beta = 0: only the root term survives
    auto pop = solved(reg, 0.0, 1e-8, 2000, 7);
    const auto chi = susceptibility_path_mc(reg, fm, pop, pop.params, 0, 5000, 23);
    CHECK(chi.value == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    // subcritical agreement with the closed form within 2%
    auto pop = solved(reg, 0.2, 1e-8, 20'000, 8);
    const auto chi = susceptibility_path_mc(reg, fm, pop, pop.params, 0, 20'000, 29);
    const double want = susceptibility_subcritical(reg, fm, pop.params);
    CHECK(std::abs(chi.value / want - 1.0) < 0.02);
    CHECK(chi.max_weight <= 1.0 + 1e-12);
    CHECK(chi.trunc_bound < 1e-3 * want);
  }
  {
    // supercritical: finite, and doubling ell_max moves the estimate by less
    // than the combined uncertainty (stderr + reported truncation bounds)
    auto pop = solved(reg, 0.7, 1e-8, 2000, 9);
    const auto a = susceptibility_path_mc(reg, fm, pop, pop.params, 0, 10'000, 31);
    CHECK(std::isfinite(a.value));
    CHECK(a.value > 0.0);
    const auto b = susceptibility_path_mc(reg, fm, pop, pop.params, 2 * a.ell_max, 10'000, 31);
    CHECK(std::abs(b.value - a.value) <=
          a.se + b.se + a.trunc_bound + b.trunc_bound + 1e-12);
  }
  {
    // rejections: nu = inf, unconverged population
    // (nu = inf solves are expensive: offspring means diverge, so keep the
    // budget tiny; the rejection only needs a population object)
    const auto heavy = DegreeModel::power_law(2.5, 1);
    const ForwardModel fh(heavy);
    SolverConfig small;
    small.population_size = 200;
    small.max_iters = 10;
    small.seed = 10;
    auto pop = fixed_point(std::make_shared<const ForwardModel>(fh), IsingParams(0.1, 0.01),
                           small);
    CHECK_THROWS_AS(susceptibility_path_mc(heavy, fh, pop, pop.params, 0, 1000, 1),
                    std::invalid_argument);
    auto unconverged = make_population(fwd(reg), IsingParams(0.2, 0.01), 1000, Init::Free);
    evolve(unconverged, 2, 1);
    CHECK_THROWS_AS(susceptibility_path_mc(reg, fm, unconverged, unconverged.params, 0, 1000, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("thermo sweep") {
  const auto reg = DegreeModel::regular(3);
  const ForwardModel fm(reg);
  SweepConfig cfg;
  cfg.solver.population_size = 2000;
  cfg.solver.seed = 11;
  cfg.n_mag = 5000;
  cfg.n_spines = 5000;
  {
    const auto pts = thermo_sweep(reg, fm, {{0.0, 0.3}}, cfg);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].M == doctest::Approx(std::tanh(0.3)).epsilon(1e-14));
    CHECK(pts[0].chi == doctest::Approx(1.0));
    CHECK(pts[0].chi_method == ChiMethod::ClosedFormSubcritical);
    CHECK(pts[0].converged);
  }
  {
    // monotone beta grid at fixed B: M nondecreasing within 2 stderr
    const std::vector<std::pair<double, double>> grid = {
        {0.2, 0.01}, {0.4, 0.01}, {0.55, 0.01}, {0.7, 0.01}};
    const auto pts = thermo_sweep(reg, fm, grid, cfg);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      CHECK(pts[i].M >= pts[i - 1].M - 2.0 * (pts[i].M_se + pts[i - 1].M_se));
    }
    CHECK(pts[3].chi_method == ChiMethod::PathMC);
    // warm start on/off agree within 2 stderr
    SweepConfig cold = cfg;
    cold.warm_start = false;
    const auto pts2 = thermo_sweep(reg, fm, grid, cold);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(std::abs(pts[i].M - pts2[i].M) <=
            2.0 * (pts[i].M_se + pts2[i].M_se) + 1e-12);
    }
  }
  {
    // per-point failure is recorded inline, sweep continues
    const auto heavy = DegreeModel::power_law(2.5, 1);
    const ForwardModel fh(heavy);
    SweepConfig small = cfg;
    small.solver.population_size = 200;
    small.solver.max_iters = 10;
    small.n_mag = 1000;
    const auto pts = thermo_sweep(heavy, fh, {{0.3, 0.01}, {0.0, 0.01}}, small);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].chi_method == ChiMethod::Failed);  // nu = inf: no chi route
    CHECK(!pts[0].error.empty());
    CHECK(pts[1].chi == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(thermo_sweep(reg, fm, {}, cfg), std::invalid_argument);
}

TEST_CASE("thermo CSV format") {
  ThermoPoint p;
  p.beta = 0.25;
  p.field_B = 1e-6;
  p.M = 0.5;
  p.M_se = 0.001;
  p.chi = 2.0;
  p.chi_se = 0.0;
  p.chi_method = ChiMethod::ClosedFormSubcritical;
  p.trunc_bound = 0.0;
  p.seed = 42;
  const std::string csv = thermo_csv({p}, "prov x");
  CHECK(csv.find("# prov x\n") == 0);
  CHECK(csv.find("beta,B,M,M_se,chi,chi_se,chi_method,trunc_bound,seed\n") != std::string::npos);
  CHECK(csv.find("0.25,9.9999999999999995e-07,0.5,0.001,2,0,ClosedFormSubcritical,0,42") !=
        std::string::npos);
}
