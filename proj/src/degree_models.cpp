#include "ising/degree_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ising/zeta.hpp"

namespace ising {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact-table cutoff for unbounded power-law supports; beyond it sampling
// inverts the analytic zeta tail.
constexpr std::int64_t kPowerLawCutoff = 10'000;

// Hard ceiling for tail inversion. P(X > 1e15) is below 1e-19 even for
// tau = 2.1, so saturation is unobservable; it only guards arithmetic.
constexpr std::int64_t kSampleCeiling = 1'000'000'000'000'000LL;

}  // namespace

// ---------------------------------------------------------------------------
// DiscreteLaw

DiscreteLaw::DiscreteLaw(std::int64_t k_first, std::vector<double> pmf_table,
                         std::vector<ZetaTailTerm> tail)
    : k_first_(k_first), pmf_(std::move(pmf_table)), tail_(std::move(tail)) {
  if (pmf_.empty()) throw std::invalid_argument("DiscreteLaw: empty pmf table");
  cdf_.resize(pmf_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf_.size(); ++i) {
    if (pmf_[i] < 0.0) throw std::invalid_argument("DiscreteLaw: negative pmf entry");
    acc += pmf_[i];
    cdf_[i] = acc;
  }
  table_mass_ = acc;
}

double DiscreteLaw::analytic_tail(std::int64_t k) const {
  double t = 0.0;
  for (const auto& term : tail_) {
    t += term.coef * hurwitz_zeta(term.s, static_cast<double>(k + term.offset));
  }
  return t;
}

double DiscreteLaw::pmf(std::int64_t k) const {
  if (k < k_first_) return 0.0;
  const std::int64_t idx = k - k_first_;
  if (idx < static_cast<std::int64_t>(pmf_.size())) return pmf_[static_cast<std::size_t>(idx)];
  if (tail_.empty()) return 0.0;
  double p = 0.0;
  for (const auto& term : tail_) {
    p += term.coef * std::pow(static_cast<double>(k + term.offset), -term.s);
  }
  return p;
}

double DiscreteLaw::tail(std::int64_t k) const {
  if (k <= k_first_) return table_mass_ + (tail_.empty() ? 0.0 : analytic_tail(cutoff() + 1));
  const std::int64_t idx = k - k_first_;
  if (idx <= static_cast<std::int64_t>(pmf_.size())) {
    const double below = cdf_[static_cast<std::size_t>(idx - 1)];
    return (table_mass_ - below) + (tail_.empty() ? 0.0 : analytic_tail(cutoff() + 1));
  }
  return tail_.empty() ? 0.0 : analytic_tail(k);
}

std::int64_t DiscreteLaw::sample(CounterRng& rng) const {
  const double u = rng.uniform();
  if (u < table_mass_ || tail_.empty()) {
    const double target = std::min(u, std::nexttoward(table_mass_, 0.0));
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    const std::size_t idx = static_cast<std::size_t>(it - cdf_.begin());
    return k_first_ + static_cast<std::int64_t>(std::min(idx, pmf_.size() - 1));
  }
  // Invert the analytic tail: smallest k > cutoff with P(X >= k+1) <= 1-u.
  const double t = 1.0 - u;
  std::int64_t lo = cutoff() + 1;
  std::int64_t hi = lo;
  while (hi < kSampleCeiling && analytic_tail(hi + 1) > t) {
    hi = std::min<std::int64_t>(kSampleCeiling, 2 * hi);
  }
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (analytic_tail(mid + 1) <= t) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

double DiscreteLaw::truncated_power_moment(double a, std::int64_t ell) const {
  if (ell < k_first_) return 0.0;
  double s = 0.0;
  const std::int64_t table_hi = std::min(ell, cutoff());
  for (std::int64_t k = k_first_; k <= table_hi; ++k) {
    const double kd = static_cast<double>(k);
    s += (k == 0 ? (a == 0.0 ? 1.0 : 0.0) : std::pow(kd, a)) *
         pmf_[static_cast<std::size_t>(k - k_first_)];
  }
  if (ell <= cutoff() || tail_.empty()) return s;
  for (const auto& term : tail_) {
    // pmf(k) = coef * (k+offset)^{-s} beyond the cutoff
    if (term.offset == 0) {
      s += term.coef * power_partial_sum(term.s - a, static_cast<std::uint64_t>(cutoff() + 1),
                                         static_cast<std::uint64_t>(ell));
    } else {
      s += term.coef *
           shifted_power_partial_sum(a - static_cast<double>(term.offset - 1), term.s,
                                     static_cast<std::uint64_t>(cutoff() + 1),
                                     static_cast<std::uint64_t>(ell));
    }
  }
  return s;
}

bool DiscreteLaw::power_moment_finite(double a) const {
  if (tail_.empty()) return true;
  double min_s = kInf;
  for (const auto& term : tail_) min_s = std::min(min_s, term.s);
  return min_s - a > 1.0;
}

double DiscreteLaw::tail_power_moment(double a, std::int64_t ell) const {
  if (!power_moment_finite(a)) return kInf;
  double s = 0.0;
  const std::int64_t table_hi = cutoff();
  for (std::int64_t k = std::max(ell + 1, k_first_); k <= table_hi; ++k) {
    const double kd = static_cast<double>(k);
    s += (k == 0 ? (a == 0.0 ? 1.0 : 0.0) : std::pow(kd, a)) *
         pmf_[static_cast<std::size_t>(k - k_first_)];
  }
  const std::int64_t lo = std::max(ell, table_hi) + 1;
  for (const auto& term : tail_) {
    if (term.offset == 0) {
      s += term.coef * zeta_tail_asymptotic(term.s - a, static_cast<double>(lo));
    } else {
      s += term.coef * shifted_power_tail_sum(a - static_cast<double>(term.offset - 1), term.s,
                                              static_cast<std::uint64_t>(lo));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// DegreeModel

DegreeModel DegreeModel::regular(int d) {
  if (d < 1) throw std::invalid_argument("regular: d must be >= 1");
  DegreeModel m;
  m.kind_ = Kind::Regular;
  m.d_ = d;
  m.law_ = DiscreteLaw(d, {1.0});
  m.size_biased_ = m.law_;
  m.mean_ = d;
  for (int r = 1; r <= 4; ++r) {
    double v = 1.0;
    for (int i = 0; i < r; ++i) v *= static_cast<double>(d - i);
    m.fm_[r - 1] = std::max(0.0, v);
  }
  return m;
}

DegreeModel DegreeModel::poisson(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("poisson: lambda must be > 0");
  DegreeModel m;
  m.kind_ = Kind::Poisson;
  m.lambda_ = lambda;
  const double trunc = -std::expm1(-lambda);  // 1 - e^{-lambda}
  std::vector<double> pmf;
  double t = lambda * std::exp(-lambda) / trunc;  // p_1
  std::int64_t k = 1;
  double cum = 0.0;
  while (true) {
    pmf.push_back(t);
    cum += t;
    ++k;
    t *= lambda / static_cast<double>(k);
    if (k > static_cast<std::int64_t>(lambda) + 2 && t < 1e-18) break;
    if (k > 400'000) break;
  }
  m.law_ = DiscreteLaw(1, std::move(pmf));
  m.mean_ = lambda / trunc;
  for (int r = 1; r <= 4; ++r) m.fm_[r - 1] = std::pow(lambda, r) / trunc;
  // D*: k p_k / E[D]
  std::vector<double> sb;
  sb.reserve(m.law_.table().size());
  for (std::size_t i = 0; i < m.law_.table().size(); ++i) {
    sb.push_back(static_cast<double>(i + 1) * m.law_.table()[i] / m.mean_);
  }
  m.size_biased_ = DiscreteLaw(1, std::move(sb));
  return m;
}

DegreeModel DegreeModel::power_law(double tau, int k_min) {
  if (!(tau > 2.0)) throw std::invalid_argument("power_law: tau must be > 2 (E[D] must be finite)");
  if (k_min < 1) throw std::invalid_argument("power_law: k_min must be >= 1");
  DegreeModel m;
  m.kind_ = Kind::PowerLaw;
  m.tau_ = tau;
  m.k_min_ = k_min;
  const double z = hurwitz_zeta(tau, k_min);
  std::vector<double> pmf;
  pmf.reserve(static_cast<std::size_t>(kPowerLawCutoff - k_min + 1));
  for (std::int64_t k = k_min; k <= kPowerLawCutoff; ++k) {
    pmf.push_back(std::pow(static_cast<double>(k), -tau) / z);
  }
  m.law_ = DiscreteLaw(k_min, std::move(pmf), {{1.0 / z, tau, 0}});
  m.mean_ = hurwitz_zeta(tau - 1.0, k_min) / z;
  // falling factorial moments via zeta combinations; coefficients are the
  // signed Stirling numbers of the first kind.
  const double zs[5] = {z, hurwitz_zeta(tau - 1.0, k_min),
                        tau - 2.0 > 1.0 ? hurwitz_zeta(tau - 2.0, k_min) : kInf,
                        tau - 3.0 > 1.0 ? hurwitz_zeta(tau - 3.0, k_min) : kInf,
                        tau - 4.0 > 1.0 ? hurwitz_zeta(tau - 4.0, k_min) : kInf};
  m.fm_[0] = zs[1] / z;
  m.fm_[1] = tau > 3.0 ? (zs[2] - zs[1]) / z : kInf;
  m.fm_[2] = tau > 4.0 ? (zs[3] - 3.0 * zs[2] + 2.0 * zs[1]) / z : kInf;
  m.fm_[3] = tau > 5.0 ? (zs[4] - 6.0 * zs[3] + 11.0 * zs[2] - 6.0 * zs[1]) / z : kInf;
  // D*: pmf k^{1-tau}/(z E[D])
  std::vector<double> sb;
  sb.reserve(m.law_.table().size());
  for (std::int64_t k = k_min; k <= kPowerLawCutoff; ++k) {
    sb.push_back(std::pow(static_cast<double>(k), 1.0 - tau) / (z * m.mean_));
  }
  m.size_biased_ =
      DiscreteLaw(k_min, std::move(sb), {{1.0 / (z * m.mean_), tau - 1.0, 0}});
  return m;
}

DegreeModel DegreeModel::empirical(const std::map<std::int64_t, double>& pmf) {
  if (pmf.empty()) throw std::invalid_argument("empirical: pmf must be nonempty");
  double sum = 0.0;
  for (const auto& [k, p] : pmf) {
    if (k < 1) throw std::invalid_argument("empirical: support must be >= 1");
    if (p < 0.0) throw std::invalid_argument("empirical: negative probability");
    sum += p;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("empirical: total mass must be positive");
  DegreeModel m;
  m.kind_ = Kind::Empirical;
  const std::int64_t k_first = pmf.begin()->first;
  const std::int64_t k_last = pmf.rbegin()->first;
  std::vector<double> table(static_cast<std::size_t>(k_last - k_first + 1), 0.0);
  for (const auto& [k, p] : pmf) table[static_cast<std::size_t>(k - k_first)] = p / sum;
  m.law_ = DiscreteLaw(k_first, table);
  double fm[4] = {0, 0, 0, 0};
  for (const auto& [k, p] : pmf) {
    double v = 1.0;
    const double kd = static_cast<double>(k);
    for (int r = 1; r <= 4; ++r) {
      v *= kd - static_cast<double>(r - 1);
      fm[r - 1] += std::max(0.0, v) * p / sum;
    }
  }
  for (int r = 0; r < 4; ++r) m.fm_[r] = fm[r];
  m.mean_ = fm[0];
  std::vector<double> sb(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    sb[i] = static_cast<double>(k_first + static_cast<std::int64_t>(i)) * table[i] / m.mean_;
  }
  m.size_biased_ = DiscreteLaw(k_first, sb);
  return m;
}

double DegreeModel::falling_moment(int r) const {
  if (r < 1 || r > 4) throw std::invalid_argument("falling_moment: r must be in [1,4]");
  return fm_[r - 1];
}

std::string DegreeModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Regular:
      os << "regular(d=" << d_ << ")";
      break;
    case Kind::Poisson:
      os << "poisson(lambda=" << lambda_ << ")";
      break;
    case Kind::PowerLaw:
      os << "power_law(tau=" << tau_ << ",k_min=" << k_min_ << ")";
      break;
    case Kind::Empirical:
      os << "empirical(k in [" << law_.k_first() << "," << law_.cutoff() << "])";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// ForwardModel

ForwardModel::ForwardModel(const DegreeModel& parent)
    : parent_(std::make_shared<const DegreeModel>(parent)) {
  const DegreeModel& p = *parent_;
  const double ed = p.mean();
  // rho_k = (k+1) p_{k+1} / E[D], support starting at k_first - 1.
  const std::int64_t kf = std::max<std::int64_t>(0, p.law().k_first() - 1);
  const std::int64_t k_hi = p.law().cutoff() - 1;
  std::vector<double> rho;
  rho.reserve(static_cast<std::size_t>(k_hi - kf + 1));
  for (std::int64_t k = kf; k <= k_hi; ++k) {
    rho.push_back(static_cast<double>(k + 1) * p.pmf(k + 1) / ed);
  }
  std::vector<DiscreteLaw::ZetaTailTerm> tail;
  if (p.kind() == DegreeModel::Kind::PowerLaw) {
    const double z = hurwitz_zeta(p.tau(), p.k_min());
    tail.push_back({1.0 / (z * ed), p.tau() - 1.0, 1});
  }
  law_ = DiscreteLaw(kf, std::move(rho), tail);

  nu_[0] = p.falling_moment(2) / ed;
  nu_[1] = p.falling_moment(3) / ed;
  nu_[2] = p.falling_moment(4) / ed;

  if (std::isfinite(nu_[0]) && nu_[0] > 0.0) {
    const std::int64_t sb_first = std::max<std::int64_t>(1, kf);
    std::vector<double> sb;
    sb.reserve(law_.table().size());
    for (std::int64_t k = sb_first; k <= law_.cutoff(); ++k) {
      sb.push_back(static_cast<double>(k) * law_.pmf(k) / nu_[0]);
    }
    std::vector<DiscreteLaw::ZetaTailTerm> sb_tail;
    if (p.kind() == DegreeModel::Kind::PowerLaw) {
      const double z = hurwitz_zeta(p.tau(), p.k_min());
      const double c = 1.0 / (z * ed * nu_[0]);
      // k (k+1)^{1-tau} = (k+1)^{2-tau} - (k+1)^{1-tau}
      sb_tail.push_back({c, p.tau() - 2.0, 1});
      sb_tail.push_back({-c, p.tau() - 1.0, 1});
    }
    size_biased_ = DiscreteLaw(sb_first, std::move(sb), sb_tail);
  }
}

bool ForwardModel::nu_finite() const { return std::isfinite(nu_[0]); }

double ForwardModel::truncated_moment(double a, std::int64_t ell) const {
  if (ell < 1) throw std::invalid_argument("truncated_moment: ell must be >= 1");
  if (a < 0.0) throw std::invalid_argument("truncated_moment: a must be >= 0");
  return law_.truncated_power_moment(a, ell);
}

double ForwardModel::tail_moment(double a, std::int64_t ell) const {
  if (ell < 1) throw std::invalid_argument("tail_moment: ell must be >= 1");
  if (!law_.power_moment_finite(a)) {
    throw std::invalid_argument("tail_moment: E[K^a 1{K>ell}] diverges for a >= tau-2");
  }
  return law_.tail_power_moment(a, ell);
}

std::int64_t ForwardModel::sample_size_biased(CounterRng& rng) const {
  if (!nu_finite()) {
    throw std::invalid_argument("sample_size_biased: undefined when nu is infinite");
  }
  return size_biased_.sample(rng);
}

ForwardModel forward(const DegreeModel& model) { return ForwardModel(model); }

}  // namespace ising
