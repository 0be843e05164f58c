#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ising/rng.hpp"

namespace ising {

// A discrete law on {k_first, k_first+1, ...} with an exact pmf/cdf table up
// to a cutoff and, for power-law models, an analytic zeta tail beyond it.
// Sampling is exact inverse-CDF: table lookups below the cutoff, bisection on
// the analytic tail above (error limited to the ~1e-15 accuracy of the tail
// evaluation itself).
class DiscreteLaw {
 public:
  struct ZetaTailTerm {
    double coef;  // tail_{>=k} += coef * sum_{j>=k+offset} j^{-s}
    double s;
    int offset;
  };

  DiscreteLaw() = default;
  DiscreteLaw(std::int64_t k_first, std::vector<double> pmf_table,
              std::vector<ZetaTailTerm> tail = {});

  std::int64_t k_first() const { return k_first_; }
  std::int64_t cutoff() const { return k_first_ + static_cast<std::int64_t>(pmf_.size()) - 1; }
  const std::vector<double>& table() const { return pmf_; }

  double pmf(std::int64_t k) const;
  double tail(std::int64_t k) const;  // P(X >= k)
  std::int64_t sample(CounterRng& rng) const;

  /// sum over support of k^a * pmf(k) for k in [k_first, ell]; exact table sum
  /// plus analytic continuation beyond the cutoff.
  double truncated_power_moment(double a, std::int64_t ell) const;
  /// sum of k^a * pmf(k) for k > ell; +inf when the series diverges.
  double tail_power_moment(double a, std::int64_t ell) const;
  /// true when sum k^a pmf(k) converges.
  bool power_moment_finite(double a) const;

 private:
  double analytic_tail(std::int64_t k) const;

  std::int64_t k_first_ = 0;
  std::vector<double> pmf_;
  std::vector<double> cdf_;      // cdf_[i] = P(X <= k_first_+i)
  double table_mass_ = 0.0;      // cdf_.back()
  std::vector<ZetaTailTerm> tail_;
};

/// Degree distribution P = (p_k)_{k>=1} of the root degree D.
/// Poisson is zero-truncated so the support starts at 1; its forward law is
/// then an exact (untruncated) Poisson, which keeps nu = lambda.
class DegreeModel {
 public:
  enum class Kind { Regular, Poisson, PowerLaw, Empirical };

  static DegreeModel regular(int d);
  static DegreeModel poisson(double lambda);
  static DegreeModel power_law(double tau, int k_min);
  static DegreeModel empirical(const std::map<std::int64_t, double>& pmf);

  Kind kind() const { return kind_; }
  std::string describe() const;

  double mean() const { return mean_; }                    // E[D]
  /// E[D(D-1)...(D-r+1)] for r in [1,4]; +inf when divergent.
  double falling_moment(int r) const;

  double pmf(std::int64_t k) const { return law_.pmf(k); }
  double tail(std::int64_t k) const { return law_.tail(k); }
  const DiscreteLaw& law() const { return law_; }
  const DiscreteLaw& size_biased_law() const { return size_biased_; }

  std::int64_t sample(CounterRng& rng) const { return law_.sample(rng); }
  /// Size-biased draw D*: P(D*=k) = k p_k / E[D].
  std::int64_t sample_size_biased(CounterRng& rng) const { return size_biased_.sample(rng); }

  // Power-law parameters (valid only for Kind::PowerLaw).
  double tau() const { return tau_; }
  int k_min() const { return k_min_; }

 private:
  DegreeModel() = default;
  void finalize();

  Kind kind_ = Kind::Regular;
  DiscreteLaw law_;
  DiscreteLaw size_biased_;
  double mean_ = 0.0;
  double fm_[4] = {0, 0, 0, 0};  // falling factorial moments of D, r=1..4
  double tau_ = 0.0;
  int k_min_ = 1;
  double lambda_ = 0.0;
  int d_ = 0;
};

/// Forward (size-biased offspring) law rho_k = (k+1) p_{k+1} / E[D] and its
/// factorial moments nu, nu_2, nu_3 (+inf flags where the series diverges;
/// divergence is decided analytically per model kind, not by truncation).
class ForwardModel {
 public:
  explicit ForwardModel(const DegreeModel& parent);

  const DegreeModel& parent() const { return *parent_; }

  double nu() const { return nu_[0]; }    // E[K]
  double nu2() const { return nu_[1]; }   // E[K(K-1)]
  double nu3() const { return nu_[2]; }   // E[K(K-1)(K-2)]
  bool nu_finite() const;

  double pmf(std::int64_t k) const { return law_.pmf(k); }
  double tail(std::int64_t k) const { return law_.tail(k); }
  const DiscreteLaw& law() const { return law_; }

  /// E[K^a 1{K <= ell}], a >= 0, ell >= 1.
  double truncated_moment(double a, std::int64_t ell) const;
  /// E[K^a 1{K > ell}]; throws when the defining series diverges.
  double tail_moment(double a, std::int64_t ell) const;

  std::int64_t sample(CounterRng& rng) const { return law_.sample(rng); }
  /// Size-biased draw K*: P(K*=k) = k rho_k / nu. Requires nu finite.
  std::int64_t sample_size_biased(CounterRng& rng) const;
  const DiscreteLaw& size_biased_law() const { return size_biased_; }

 private:
  std::shared_ptr<const DegreeModel> parent_;
  DiscreteLaw law_;
  DiscreteLaw size_biased_;   // empty when nu is infinite
  double nu_[3] = {0, 0, 0};
};

ForwardModel forward(const DegreeModel& model);

}  // namespace ising
