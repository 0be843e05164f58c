#include "ising/cavity.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <sstream>

namespace ising {

namespace {

// Per-sample offspring cap; see decisions on heavy-tailed draws. The capped
// count is surfaced in diagnostics.
constexpr std::int64_t kOffspringCap = 10'000'000;

double mean_of(std::span<const double> v) { return pairwise_sum(v) / static_cast<double>(v.size()); }

// One update h_i <- B + sum_{j<=K} xi(prev[J_j]). xi over the previous
// population is hoisted into xi_buf once per iteration.
void evolve_step(const ForwardModel& fm, const IsingParams& p, std::uint64_t seed,
                 std::uint64_t iter, std::vector<double>& cur, std::vector<double>& next,
                 std::vector<double>& xi_buf, std::atomic<std::int64_t>& capped) {
  const std::size_t n = cur.size();
  const int workers = default_workers();
  xi_buf.resize(n);
  parallel_for(n, workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) xi_buf[i] = xi(p, cur[i]);
  });
  next.resize(n);
  parallel_for(n, workers, [&](std::size_t lo, std::size_t hi) {
    std::int64_t local_capped = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      CounterRng rng(derive_key(seed, Stream::Evolve, iter, i));
      std::int64_t k = fm.sample(rng);
      if (k > kOffspringCap) {
        k = kOffspringCap;
        ++local_capped;
      }
      double acc = p.field_B;
      for (std::int64_t j = 0; j < k; ++j) acc += xi_buf[rng.below(n)];
      next[i] = acc;
    }
    if (local_capped) capped += local_capped;
  });
}

}  // namespace

CavityPopulation make_population(std::shared_ptr<const ForwardModel> model,
                                 const IsingParams& params, std::size_t size, Init init) {
  if (size == 0) throw std::invalid_argument("make_population: size must be positive");
  CavityPopulation pop;
  pop.model = std::move(model);
  pop.params = params;
  pop.init = init;
  pop.samples.assign(size, init == Init::Free ? params.field_B : kPlusSentinel);
  return pop;
}

void evolve(CavityPopulation& pop, int steps, std::uint64_t seed) {
  std::vector<double> next, xi_buf;
  std::atomic<std::int64_t> capped{0};
  for (int s = 0; s < steps; ++s) {
    evolve_step(*pop.model, pop.params, seed, static_cast<std::uint64_t>(pop.iterations), pop.samples,
                next, xi_buf, capped);
    pop.exi_trace.push_back(mean_of(xi_buf));
    pop.samples.swap(next);
    ++pop.iterations;
  }
  pop.capped_offspring += capped.load();
  // Refresh the xi cache for the final state. The trace keeps one entry per
  // pre-update state, so repeated evolve calls concatenate cleanly.
  pop.xi_samples.resize(pop.samples.size());
  parallel_for(pop.samples.size(), default_workers(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) pop.xi_samples[i] = xi(pop.params, pop.samples[i]);
  });
  pop.exi_value = mean_of(pop.xi_samples);
}

CavityPopulation fixed_point(const std::shared_ptr<const ForwardModel>& model,
                             const IsingParams& params, const SolverConfig& cfg, Init init,
                             const std::vector<double>* warm_start) {
  if (!(params.field_B > 0.0)) {
    throw std::invalid_argument("fixed_point: requires B > 0 (uniqueness regime)");
  }
  auto solve_one = [&](Init which, std::uint64_t seed, bool allow_warm) {
    CavityPopulation pop = make_population(model, params, cfg.population_size, which);
    if (allow_warm && warm_start != nullptr) {
      if (warm_start->size() != cfg.population_size) {
        throw std::invalid_argument("fixed_point: warm start size mismatch");
      }
      pop.samples = *warm_start;
    }
    std::vector<double> next, xi_buf;
    std::atomic<std::int64_t> capped{0};
    std::deque<std::vector<double>> ring;  // recent populations, newest last
    ring.push_back(pop.samples);
    const int w = std::max(1, cfg.window);
    bool done = false;
    while (pop.iterations < cfg.max_iters && !done) {
      evolve_step(*model, params, seed, static_cast<std::uint64_t>(pop.iterations), pop.samples,
                  next, xi_buf, capped);
      pop.exi_trace.push_back(mean_of(xi_buf));
      pop.samples.swap(next);
      ++pop.iterations;
      ring.push_back(pop.samples);
      if (static_cast<int>(ring.size()) > w + 1) ring.pop_front();

      const int t = static_cast<int>(pop.exi_trace.size());
      if (t >= 2 * w && pop.iterations >= w + 1) {
        double m1 = 0.0, m0 = 0.0;
        for (int j = 0; j < w; ++j) {
          m1 += pop.exi_trace[static_cast<std::size_t>(t - 1 - j)];
          m0 += pop.exi_trace[static_cast<std::size_t>(t - 1 - w - j)];
        }
        m1 /= w;
        m0 /= w;
        if (std::abs(m1 - m0) <= cfg.tol * std::abs(m1)) {
          // Shape guard: KS distance between populations `window` apart.
          std::vector<double> a = ring.front();
          std::vector<double> b = ring.back();
          std::sort(a.begin(), a.end());
          std::sort(b.begin(), b.end());
          if (ks_distance_sorted(a, b) < cfg.ks_conv_tol) done = true;
        }
      }
    }
    pop.converged = done;
    pop.capped_offspring = capped.load();
    pop.xi_samples.resize(pop.samples.size());
    parallel_for(pop.samples.size(), default_workers(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) pop.xi_samples[i] = xi(params, pop.samples[i]);
    });
    pop.exi_value = mean_of(pop.xi_samples);
    pop.exi_trace.push_back(pop.exi_value);
    return pop;
  };

  CavityPopulation pop = solve_one(init, cfg.seed, true);
  if (cfg.check_uniqueness) {
    // The comparison run gets an independent stream and no warm start, so the
    // two populations are genuinely distinct samples of their fixed points.
    CavityPopulation other = solve_one(init == Init::Free ? Init::Plus : Init::Free,
                                       derive_key(cfg.seed, Stream::Generic, 0x706c7573ULL), false);
    std::vector<double> a = pop.samples;
    std::vector<double> b = other.samples;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double ks = ks_distance_sorted(a, b);
    if (ks >= cfg.ks_tol) {
      std::ostringstream os;
      os << "fixed_point: free/plus populations disagree (KS = " << ks << " >= " << cfg.ks_tol
         << ")";
      throw NonConvergence(os.str(), pop.exi_trace);
    }
  }
  return pop;
}

PopulationMoments moments(const CavityPopulation& pop) {
  if (pop.samples.empty()) throw std::invalid_argument("moments: empty population");
  const std::size_t n = pop.samples.size();
  std::vector<double> buf(n);
  PopulationMoments out;

  const std::vector<double>* xs = &pop.xi_samples;
  std::vector<double> xi_local;
  if (xs->size() != n) {
    xi_local.resize(n);
    for (std::size_t i = 0; i < n; ++i) xi_local[i] = xi(pop.params, pop.samples[i]);
    xs = &xi_local;
  }

  auto estimate = [&](std::span<const double> v) {
    MomentEstimate e;
    e.value = mean_of(v);
    e.se = jackknife_se(v);
    return e;
  };

  out.exi = estimate(*xs);
  for (std::size_t i = 0; i < n; ++i) buf[i] = (*xs)[i] * (*xs)[i];
  out.exi2 = estimate(buf);
  for (std::size_t i = 0; i < n; ++i) buf[i] = (*xs)[i] * (*xs)[i] * (*xs)[i];
  out.exi3 = estimate(buf);
  out.eh = estimate(pop.samples);
  for (std::size_t i = 0; i < n; ++i) buf[i] = pop.samples[i] * pop.samples[i];
  out.eh2 = estimate(buf);
  return out;
}

}  // namespace ising
