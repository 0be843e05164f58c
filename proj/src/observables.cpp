#include "ising/observables.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ising {

namespace {

constexpr std::int64_t kDegreeCap = 10'000'000;
constexpr int kEllMaxCap = 10'000;

std::int64_t capped(std::int64_t k) { return std::min(k, kDegreeCap); }

// log(1 + (cosh(2h)-1) / (2 cosh^2 beta)) = log1p((1-bh^2) sinh^2 h),
// with a large-|h| branch to dodge sinh overflow.
double log_weight_factor(double beta_hat, double h) {
  const double sech2 = 1.0 - beta_hat * beta_hat;
  const double ah = std::abs(h);
  if (std::isinf(ah)) return std::numeric_limits<double>::infinity();
  if (ah > 20.0) {
    // sinh^2 h = e^{2h}(1 - e^{-2h})^2 / 4 dominates 1 here.
    return std::log(sech2 / 4.0) + 2.0 * ah + 2.0 * std::log1p(-std::exp(-2.0 * ah));
  }
  const double sh = std::sinh(h);
  return std::log1p(sech2 * sh * sh);
}

double critical_beta_of(const ForwardModel& fm) {
  const double nu = fm.nu();
  if (!std::isfinite(nu)) return 0.0;
  if (nu <= 1.0) return std::numeric_limits<double>::infinity();
  return std::atanh(1.0 / nu);
}

}  // namespace

std::string to_string(ChiMethod m) {
  switch (m) {
    case ChiMethod::ClosedFormSubcritical:
      return "ClosedFormSubcritical";
    case ChiMethod::PathMC:
      return "PathMC";
    case ChiMethod::Failed:
      return "FAILED";
  }
  return "?";
}

ValueSE magnetization(const DegreeModel& model, const CavityPopulation& pop, std::size_t n,
                      std::uint64_t seed) {
  if (pop.samples.empty()) throw std::invalid_argument("magnetization: empty population");
  if (n < 1000) throw std::invalid_argument("magnetization: n must be >= 1000");
  const std::size_t psize = pop.xi_samples.size();
  if (psize != pop.samples.size()) {
    throw std::invalid_argument("magnetization: population xi cache missing");
  }
  std::vector<double> draws(n);
  parallel_for(n, default_workers(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      CounterRng rng(derive_key(seed, Stream::Magnetization, i));
      const std::int64_t d = capped(model.sample(rng));
      double acc = pop.params.field_B;
      for (std::int64_t j = 0; j < d; ++j) acc += pop.xi_samples[rng.below(psize)];
      draws[i] = std::tanh(acc);
    }
  });
  ValueSE out;
  out.value = mean(draws);
  out.se = jackknife_se(draws);
  out.warned = !pop.converged;
  return out;
}

double susceptibility_subcritical(const DegreeModel& model, const ForwardModel& fm,
                                  const IsingParams& params) {
  if (params.beta_hat == 0.0) return 1.0;  // independent spins regardless of nu
  const double nu = fm.nu();
  if (!std::isfinite(nu)) {
    throw std::invalid_argument("susceptibility_subcritical: nu must be finite");
  }
  if (params.beta_hat * nu >= 1.0) {
    throw std::invalid_argument("susceptibility_subcritical: requires beta_hat * nu < 1");
  }
  return 1.0 + model.mean() * params.beta_hat / (1.0 - nu * params.beta_hat);
}

ChiEstimate susceptibility_path_mc(const DegreeModel& model, const ForwardModel& fm,
                                   const CavityPopulation& pop, const IsingParams& params,
                                   int ell_max, std::size_t n_spines, std::uint64_t seed) {
  if (!fm.nu_finite()) {
    throw std::invalid_argument("susceptibility_path_mc: size-biasing undefined for nu = inf");
  }
  if (!pop.converged) {
    throw std::invalid_argument("susceptibility_path_mc: population has not converged");
  }
  const std::size_t psize = pop.xi_samples.size();
  if (psize != pop.samples.size() || psize == 0) {
    throw std::invalid_argument("susceptibility_path_mc: population xi cache missing");
  }
  const double nu = fm.nu();
  const double bh = params.beta_hat;
  const double bhnu = bh * nu;
  const double prefactor0 = model.mean() / nu;

  // Truncation rule. Subcritical: smallest depth whose geometric tail bound
  // drops below 1e-4 (chi >= 1 makes the absolute form conservative).
  // Supercritical: the spine-length scale 4/(beta - beta_c), capped.
  if (ell_max <= 0) {
    if (bhnu < 1e-8) {
      ell_max = 1;
    } else if (bhnu < 1.0) {
      const double target = 1e-4 * (1.0 - bhnu) / prefactor0;
      ell_max = static_cast<int>(std::ceil(std::log(target) / std::log(bhnu)));
      ell_max = std::clamp(ell_max, 1, kEllMaxCap);
    } else {
      const double bc = critical_beta_of(fm);
      const double gap = params.beta - bc;
      ell_max = gap > 0.0 ? static_cast<int>(std::ceil(4.0 / gap)) : kEllMaxCap;
      ell_max = std::clamp(ell_max, 1, kEllMaxCap);
    }
  }

  const std::size_t per_depth =
      std::max<std::size_t>(100, n_spines / static_cast<std::size_t>(ell_max + 1));

  std::vector<double> term(static_cast<std::size_t>(ell_max) + 1, 0.0);
  std::vector<double> term_se(static_cast<std::size_t>(ell_max) + 1, 0.0);
  std::atomic<double> max_weight{0.0};

  // Depth 0: the root self-correlation E[1 - tanh^2(B + sum_{i<=D} xi(h_i))]
  // with the plain root degree D and no spine prefactor.
  {
    std::vector<double> vals(per_depth);
    parallel_for(per_depth, default_workers(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t s = lo; s < hi; ++s) {
        CounterRng rng(derive_key(seed, Stream::Spine, 0, s));
        const std::int64_t d = capped(model.sample(rng));
        double acc = params.field_B;
        for (std::int64_t j = 0; j < d; ++j) acc += pop.xi_samples[rng.below(psize)];
        const double t = std::tanh(acc);
        vals[s] = 1.0 - t * t;
      }
    });
    term[0] = mean(vals);
    term_se[0] = jackknife_se(vals);
  }

  for (int ell = 1; ell <= ell_max; ++ell) {
    std::vector<double> vals(per_depth);
    parallel_for(per_depth, default_workers(), [&](std::size_t lo, std::size_t hi) {
      double chunk_max = 0.0;
      for (std::size_t s = lo; s < hi; ++s) {
        CounterRng rng(derive_key(seed, Stream::Spine, static_cast<std::uint64_t>(ell), s));
        // Terminal vertex: one fresh application of the recursion.
        const std::int64_t k_term = capped(fm.sample(rng));
        double h_next = params.field_B;
        for (std::int64_t j = 0; j < k_term; ++j) h_next += pop.xi_samples[rng.below(psize)];
        double log_w = -log_weight_factor(params.beta_hat, h_next);
        // Internal spine vertices i = ell-1 .. 1 with size-biased degrees.
        for (int i = ell - 1; i >= 1; --i) {
          const std::int64_t kstar = capped(fm.sample_size_biased(rng));
          double h = params.field_B + xi(params, h_next);
          for (std::int64_t j = 0; j < kstar - 1; ++j) h += pop.xi_samples[rng.below(psize)];
          h_next = h;
          log_w -= log_weight_factor(params.beta_hat, h);
        }
        // Root with size-biased degree D*.
        const std::int64_t dstar = capped(model.sample_size_biased(rng));
        double h_root = params.field_B + xi(params, h_next);
        for (std::int64_t j = 0; j < dstar - 1; ++j) h_root += pop.xi_samples[rng.below(psize)];
        const double t = std::tanh(h_root);
        const double w = std::exp(log_w);
        chunk_max = std::max(chunk_max, w);
        vals[s] = (1.0 - t * t) * w;
      }
      // max over chunks; combined below deterministically via atomic max
      double prev = max_weight.load();
      while (chunk_max > prev && !max_weight.compare_exchange_weak(prev, chunk_max)) {
      }
    });
    const double m = mean(vals);
    const double se = jackknife_se(vals);
    if (bhnu <= 0.0) continue;  // beta = 0: only depth 0 contributes
    const double log_pref = std::log(prefactor0) + ell * std::log(bhnu);
    term[static_cast<std::size_t>(ell)] = m > 0.0 ? std::exp(log_pref + std::log(m)) : 0.0;
    term_se[static_cast<std::size_t>(ell)] = se > 0.0 ? std::exp(log_pref + std::log(se)) : 0.0;
  }

  ChiEstimate out;
  out.ell_max = ell_max;
  out.max_weight = max_weight.load();
  out.value = pairwise_sum(term);
  double var = 0.0;
  for (double s : term_se) var += s * s;
  out.se = std::sqrt(var);

  if (bhnu < 1.0) {
    out.trunc_bound = bhnu < 1e-8
                          ? 0.0
                          : prefactor0 * std::pow(bhnu, ell_max + 1) / (1.0 - bhnu);
  } else {
    // Empirical decay of the last resolved terms.
    double bound = std::numeric_limits<double>::infinity();
    int last = ell_max;
    while (last > 0 && term[static_cast<std::size_t>(last)] == 0.0) --last;
    const int back = std::min(5, last);
    if (back >= 1 && term[static_cast<std::size_t>(last)] > 0.0) {
      const double r = std::pow(
          term[static_cast<std::size_t>(last)] / term[static_cast<std::size_t>(last - back)],
          1.0 / back);
      if (r < 1.0) bound = term[static_cast<std::size_t>(last)] * r / (1.0 - r);
      if (last < ell_max) bound = std::min(bound, term[static_cast<std::size_t>(last)]);
    }
    out.trunc_bound = bound;
  }
  return out;
}

std::vector<ThermoPoint> thermo_sweep(const DegreeModel& model, const ForwardModel& fm,
                                      const std::vector<std::pair<double, double>>& grid,
                                      const SweepConfig& cfg) {
  if (grid.empty()) throw std::invalid_argument("thermo_sweep: empty grid");
  auto fm_ptr = std::make_shared<const ForwardModel>(fm);
  std::vector<ThermoPoint> out;
  out.reserve(grid.size());
  std::vector<double> warm;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto [beta, B] = grid[g];
    ThermoPoint pt;
    pt.beta = beta;
    pt.field_B = B;
    pt.seed = cfg.solver.seed;
    try {
      IsingParams params(beta, B);
      SolverConfig solver = cfg.solver;
      solver.seed = derive_key(cfg.solver.seed, Stream::Generic, 0x73776565ULL + g);
      const bool use_warm = cfg.warm_start && warm.size() == solver.population_size;
      CavityPopulation pop =
          fixed_point(fm_ptr, params, solver, Init::Free, use_warm ? &warm : nullptr);
      pt.warm_started = use_warm;
      pt.converged = pop.converged;
      pt.n_samples = pop.samples.size();
      const ValueSE m = magnetization(model, pop, cfg.n_mag, solver.seed);
      pt.M = m.value;
      pt.M_se = m.se;
      const double nu = fm.nu();
      const bool subcritical = params.beta_hat == 0.0 ||
                               (std::isfinite(nu) && params.beta_hat * nu < 1.0);
      if (subcritical) {
        pt.chi = susceptibility_subcritical(model, fm, params);
        pt.chi_se = 0.0;
        pt.chi_method = ChiMethod::ClosedFormSubcritical;
        pt.trunc_bound = 0.0;
      } else {
        const ChiEstimate chi = susceptibility_path_mc(model, fm, pop, params, cfg.ell_max,
                                                       cfg.n_spines, solver.seed);
        pt.chi = chi.value;
        pt.chi_se = chi.se;
        pt.chi_method = ChiMethod::PathMC;
        pt.trunc_bound = chi.trunc_bound;
      }
      if (cfg.warm_start) warm = pop.samples;
    } catch (const std::exception& e) {
      pt.chi_method = ChiMethod::Failed;
      pt.error = e.what();
      pt.M = pt.M_se = pt.chi = pt.chi_se = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(pt));
  }
  return out;
}

std::string thermo_csv(const std::vector<ThermoPoint>& points, const std::string& provenance) {
  std::ostringstream os;
  if (!provenance.empty()) os << "# " << provenance << "\n";
  os << "beta,B,M,M_se,chi,chi_se,chi_method,trunc_bound,seed\n";
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& p : points) {
    os << fmt(p.beta) << ',' << fmt(p.field_B) << ',' << fmt(p.M) << ',' << fmt(p.M_se) << ','
       << fmt(p.chi) << ',' << fmt(p.chi_se) << ',' << to_string(p.chi_method) << ','
       << fmt(p.trunc_bound) << ',' << p.seed << "\n";
  }
  return os.str();
}

}  // namespace ising
