#include "doctest.h"

#include <cmath>
#include <map>
#include <vector>

#include "ising/degree_models.hpp"
#include "ising/rng.hpp"

using namespace ising;

namespace {

// chi-squared critical value at significance alpha via Wilson-Hilferty;
// z is the standard normal quantile of 1-alpha.
double chi2_critical(double dof, double z) {
  const double t = 2.0 / (9.0 * dof);
  const double c = 1.0 - t + z * std::sqrt(t);
  return dof * c * c * c;
}

constexpr double kZ999 = 3.0902323061678132;  // Phi^{-1}(1 - 1e-3)

// Goodness of fit of `n` samples against the exact law: bins per support
// point until the expected count drops below 5, remainder pooled into a tail
// bin.
void check_sampler_chi2(const DiscreteLaw& law, std::uint64_t seed) {
  const std::size_t n = 1'000'000;
  CounterRng rng(derive_key(seed, Stream::Generic, 0xc2));
  std::map<std::int64_t, std::size_t> counts;
  for (std::size_t i = 0; i < n; ++i) ++counts[law.sample(rng)];

  std::int64_t k = law.k_first();
  double chi2 = 0.0;
  int dof = -1;  // bins - 1
  double tail_expected = static_cast<double>(n);
  std::size_t seen = 0;
  while (true) {
    const double expected = static_cast<double>(n) * law.pmf(k);
    if (expected < 5.0 && k > law.k_first()) break;
    const auto it = counts.find(k);
    const double observed = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    if (it != counts.end()) seen += it->second;
    chi2 += (observed - expected) * (observed - expected) / expected;
    tail_expected -= expected;
    ++dof;
    ++k;
    if (k > law.cutoff() + 10) break;
  }
  if (tail_expected > 5.0) {
    const double observed = static_cast<double>(n - seen);
    chi2 += (observed - tail_expected) * (observed - tail_expected) / tail_expected;
    ++dof;
  }
  if (dof < 1) return;  // degenerate law, nothing to test
  INFO("chi2 = " << chi2 << " dof = " << dof);
  CHECK(chi2 < chi2_critical(static_cast<double>(dof), kZ999));
}

}  // namespace

TEST_CASE("model construction examples and rejections") {
  const auto reg = DegreeModel::regular(3);
  CHECK(reg.pmf(3) == 1.0);
  CHECK(reg.pmf(2) == 0.0);
  CHECK(reg.mean() == 3.0);

  const auto pl = DegreeModel::power_law(3.5, 1);
  // p_1 = 1 / zeta(3.5), zeta computed by direct series summation
  double z = 0.0;
  for (int k = 4'000'000; k >= 1; --k) z += std::pow(static_cast<double>(k), -3.5);
  CHECK(pl.pmf(1) == doctest::Approx(1.0 / z).epsilon(1e-10));

  const auto emp = DegreeModel::empirical({{1, 0.5}, {3, 0.5}});
  CHECK(emp.mean() == doctest::Approx(2.0).epsilon(1e-15));

  CHECK_THROWS_AS(DegreeModel::power_law(2.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(DegreeModel::power_law(1.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(DegreeModel::power_law(3.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(DegreeModel::regular(0), std::invalid_argument);
  CHECK_THROWS_AS(DegreeModel::poisson(0.0), std::invalid_argument);
  CHECK_THROWS_AS(DegreeModel::empirical({}), std::invalid_argument);
  CHECK_THROWS_AS(DegreeModel::empirical({{1, -0.5}, {3, 1.5}}), std::invalid_argument);
  CHECK_THROWS_AS(DegreeModel::empirical({{0, 1.0}}), std::invalid_argument);
}

TEST_CASE("pmf normalization including analytic tails") {
  const std::vector<DegreeModel> models = {
      DegreeModel::regular(3), DegreeModel::poisson(3.0), DegreeModel::power_law(3.5, 1),
      DegreeModel::power_law(2.5, 1), DegreeModel::empirical({{1, 0.5}, {3, 0.5}})};
  for (const auto& m : models) {
    INFO(m.describe());
    CHECK(m.tail(m.law().k_first()) == doctest::Approx(1.0).epsilon(1e-12));
    const ForwardModel fm(m);
    CHECK(fm.tail(fm.law().k_first()) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("forward model examples") {
  {
    const ForwardModel fm(DegreeModel::regular(3));
    CHECK(fm.pmf(2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fm.nu() == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(fm.nu2() == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(fm.nu3() == doctest::Approx(0.0).epsilon(1e-15));
  }
  {
    // size-biasing a (zero-truncated) Poisson gives exact Poisson offspring
    const ForwardModel fm(DegreeModel::poisson(3.0));
    double nu_direct = 0.0;
    for (std::int64_t k = fm.law().k_first(); k <= fm.law().cutoff(); ++k) {
      nu_direct += static_cast<double>(k) * fm.pmf(k);
    }
    CHECK(fm.nu() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(nu_direct == doctest::Approx(fm.nu()).epsilon(1e-10));
    const double p0 = std::exp(-3.0);
    CHECK(fm.pmf(0) == doctest::Approx(p0).epsilon(1e-12));
    CHECK(fm.pmf(2) == doctest::Approx(p0 * 9.0 / 2.0).epsilon(1e-12));
  }
  { // tau in (2,3]: nu diverges
    const ForwardModel fm(DegreeModel::power_law(2.5, 1));
    CHECK(!fm.nu_finite());
    CHECK(std::isinf(fm.nu()));
    CounterRng rng(1);
    CHECK_THROWS_AS(fm.sample_size_biased(rng), std::invalid_argument);
  }
}

TEST_CASE("nu equals E[D(D-1)]/E[D] computed independently") {
  auto independent_nu = [](const DegreeModel& m, std::int64_t hi) {
    double s = 0.0, mean = 0.0;
    for (std::int64_t k = hi; k >= 1; --k) {
      const double kd = static_cast<double>(k);
      s += kd * (kd - 1.0) * m.pmf(k);
      mean += kd * m.pmf(k);
    }
    return s / mean;
  };
  {
    const auto m = DegreeModel::poisson(3.0);
    CHECK(ForwardModel(m).nu() == doctest::Approx(independent_nu(m, 300)).epsilon(1e-10));
  }
  {
    const auto m = DegreeModel::empirical({{2, 0.25}, {3, 0.5}, {7, 0.25}});
    CHECK(ForwardModel(m).nu() == doctest::Approx(independent_nu(m, 7)).epsilon(1e-12));
  }
  {
    // power law: direct sum to 3e6 plus an integral bracket on the remainder
    const auto m = DegreeModel::power_law(4.5, 2);
    const std::int64_t n = 3'000'000;
    double s = 0.0, mean_head = 0.0;
    for (std::int64_t k = n; k >= 2; --k) {
      const double kd = static_cast<double>(k);
      const double p = m.pmf(k);
      s += kd * (kd - 1.0) * p;
      mean_head += kd * p;
    }
    // remainder of sum k^2 p_k is below integral of x^{-2.5}/Z from n
    const double z_norm = m.pmf(2) > 0 ? std::pow(2.0, -4.5) / m.pmf(2) : 1.0;
    const double rem_hi = std::pow(static_cast<double>(n), -1.5) / 1.5 / z_norm;
    const double nu = ForwardModel(m).nu();
    CHECK(nu >= s / m.mean() - 1e-10);
    CHECK(nu <= (s + rem_hi) / m.mean() + 1e-10);
    CHECK(mean_head == doctest::Approx(m.mean()).epsilon(1e-9));
  }
}

TEST_CASE("truncated and tail moments") {
  {
    const ForwardModel fm(DegreeModel::regular(3));
    CHECK(fm.truncated_moment(3.0, 10) == doctest::Approx(8.0).epsilon(1e-15));
    CHECK(fm.tail_moment(3.0, 10) == doctest::Approx(0.0));
  }
  {
    // E[K^a 1{K<=ell}] grows like ell^{a-(tau-2)} = ell^{1/2} for a=3, tau=4.5
    const ForwardModel fm(DegreeModel::power_law(4.5, 1));
    const double r = fm.truncated_moment(3.0, 10'000'000) / fm.truncated_moment(3.0, 1'000'000);
    CHECK(r == doctest::Approx(std::sqrt(10.0)).epsilon(0.02));
  }
  {
    const ForwardModel fm(DegreeModel::poisson(3.0));
    CHECK(fm.truncated_moment(1.0, 1'000'000) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fm.truncated_moment(1.0, 2) + fm.tail_moment(1.0, 2) ==
          doctest::Approx(3.0).epsilon(1e-12));
  }
  {
    // tail variant must reject divergent series (a >= tau-2)
    const ForwardModel fm(DegreeModel::power_law(3.5, 1));
    CHECK_THROWS_AS(fm.tail_moment(1.5, 10), std::invalid_argument);
    CHECK_THROWS_AS(fm.tail_moment(2.0, 10), std::invalid_argument);
    CHECK_NOTHROW(fm.tail_moment(1.0, 10));
    // brute-force cross-check of a convergent tail moment
    double brute = 0.0;
    for (std::int64_t k = 4'000'000; k > 10; --k) brute += std::pow(static_cast<double>(k), 0.5) * fm.pmf(k);
    CHECK(fm.tail_moment(0.5, 10) == doctest::Approx(brute).epsilon(1e-4));
  }
  CHECK_THROWS_AS(ForwardModel(DegreeModel::regular(3)).truncated_moment(1.0, 0),
                  std::invalid_argument);
}

TEST_CASE("power-law tail sandwich for the forward law") {
  // constants fitted once on this law and frozen: for PowerLaw(3.5,1)
  // rho_{>=k} * k^{tau-2} stays within [0.25, 0.50] on [1, 1e4]
  const ForwardModel fm(DegreeModel::power_law(3.5, 1));
  for (std::int64_t k = 1; k <= 10'000; k = k < 128 ? k + 1 : k + k / 7) {
    const double r = fm.tail(k) * std::pow(static_cast<double>(k), 1.5);
    INFO("k = " << k);
    CHECK(r >= 0.25);
    CHECK(r <= 0.50);
  }
}

TEST_CASE("samplers: chi-squared goodness of fit at 1e-3") {
  check_sampler_chi2(DegreeModel::poisson(3.0).law(), 11);
  check_sampler_chi2(DegreeModel::power_law(3.5, 1).law(), 12);
  check_sampler_chi2(DegreeModel::empirical({{1, 0.5}, {3, 0.5}}).law(), 13);
  check_sampler_chi2(ForwardModel(DegreeModel::poisson(3.0)).law(), 14);
  check_sampler_chi2(ForwardModel(DegreeModel::power_law(3.5, 1)).law(), 15);
  // regular: degenerate, every draw equals d
  CounterRng rng(derive_key(16, Stream::Generic));
  const auto reg = DegreeModel::regular(3);
  for (int i = 0; i < 1000; ++i) CHECK(reg.sample(rng) == 3);
}

TEST_CASE("size-biased sampling") {
  {
    // P(D* = 3) = 3 * 0.5 / 2 = 0.75, 3-sigma binomial band on 1e6 draws
    const auto m = DegreeModel::empirical({{1, 0.5}, {3, 0.5}});
    CounterRng rng(derive_key(21, Stream::Generic));
    const std::size_t n = 1'000'000;
    std::size_t threes = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (m.sample_size_biased(rng) == 3) ++threes;
    }
    const double phat = static_cast<double>(threes) / static_cast<double>(n);
    CHECK(std::abs(phat - 0.75) < 3.0 * std::sqrt(0.75 * 0.25 / static_cast<double>(n)));
  }
  {
    // forward tail frequencies vs the exact law, 3-sigma bands
    const ForwardModel fm(DegreeModel::power_law(3.5, 1));
    CounterRng rng(derive_key(22, Stream::Generic));
    const std::size_t n = 1'000'000;
    std::size_t ge10 = 0, ge100 = 0, ge1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t k = fm.sample(rng);
      ge1 += k >= 1;
      ge10 += k >= 10;
      ge100 += k >= 100;
    }
    auto band = [n](double p) { return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n)); };
    for (auto [k, cnt] : {std::pair<std::int64_t, std::size_t>{1, ge1}, {10, ge10}, {100, ge100}}) {
      const double exact = fm.tail(k);
      const double freq = static_cast<double>(cnt) / static_cast<double>(n);
      INFO("k = " << k);
      CHECK(std::abs(freq - exact) < band(exact) + 1e-9);
    }
  }
}

TEST_CASE("sampling determinism and tail inversion") {
  const ForwardModel fm(DegreeModel::power_law(2.5, 1));
  CounterRng a(derive_key(5, Stream::Generic));
  CounterRng b(derive_key(5, Stream::Generic));
  std::int64_t max_seen = 0;
  for (int i = 0; i < 200'000; ++i) {
    const std::int64_t x = fm.sample(a);
    CHECK(x == fm.sample(b));
    max_seen = std::max(max_seen, x);
  }
  // tau = 2.5 has tail exponent 1/2: 2e5 draws reach past the 1e4 table
  CHECK(max_seen > 10'000);
}
