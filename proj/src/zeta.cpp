#include "ising/zeta.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ising {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Boundary from which the Euler-Maclaurin asymptotic is trusted.
constexpr std::uint64_t kEmBoundary = 64;

// integral_a^b x^{-s} dx, stable through s = 1.
double power_integral(double s, double a, double b) {
  const double u = (1.0 - s) * std::log(b / a);
  // (a^{1-s} - b^{1-s})/(s-1) = a^{1-s} * expm1(u) / (1-s) with u as above.
  if (std::abs(u) < 1e-9) {
    return std::pow(a, 1.0 - s) * std::log(b / a) * (1.0 + 0.5 * u);
  }
  return std::pow(a, 1.0 - s) * std::expm1(u) / (1.0 - s);
}

// Euler-Maclaurin for sum_{k=a}^{b} k^{-s}, valid for any real s once a is
// past the asymptotic boundary. b may be +inf when s > 1.
double em_partial(double s, double a, double b) {
  const bool open = std::isinf(b);
  const double pa = std::pow(a, -s);
  const double pb = open ? 0.0 : std::pow(b, -s);
  double v = open ? std::pow(a, 1.0 - s) / (s - 1.0) : power_integral(s, a, b);
  v += 0.5 * (pa + pb);
  const double ia = 1.0 / a, ib = open ? 0.0 : 1.0 / b;
  v += (s / 12.0) * (pa * ia - pb * ib);
  const double c3 = s * (s + 1.0) * (s + 2.0) / 720.0;
  v -= c3 * (pa * ia * ia * ia - pb * ib * ib * ib);
  const double c5 = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0;
  v += c5 * (pa * ia * ia * ia * ia * ia - pb * ib * ib * ib * ib * ib);
  return v;
}

}  // namespace

double zeta_tail_asymptotic(double s, double q) { return em_partial(s, q, kInf); }

double hurwitz_zeta(double s, double q) {
  if (q < 1.0) throw std::invalid_argument("hurwitz_zeta: q must be >= 1");
  if (s <= 1.0) return kInf;  // divergent series
  double sum = 0.0;
  std::uint64_t k = static_cast<std::uint64_t>(q);
  const std::uint64_t boundary = kEmBoundary > k ? kEmBoundary : k;
  for (; k < boundary; ++k) {
    const double term = std::pow(static_cast<double>(k), -s);
    sum += term;
    if (term < sum * 1e-18) return sum;  // fast-converging large s
  }
  return sum + zeta_tail_asymptotic(s, static_cast<double>(boundary));
}

double power_partial_sum(double s, std::uint64_t lo, std::uint64_t hi) {
  if (hi < lo) return 0.0;
  if (lo < 1) throw std::invalid_argument("power_partial_sum: lo must be >= 1");
  double sum = 0.0;
  const std::uint64_t direct_hi = std::min(hi, lo + 4 * kEmBoundary);
  for (std::uint64_t k = lo; k <= direct_hi; ++k) {
    sum += std::pow(static_cast<double>(k), -s);
  }
  if (direct_hi == hi) return sum;
  return sum + em_partial(s, static_cast<double>(direct_hi + 1), static_cast<double>(hi));
}

double shifted_power_partial_sum(double a, double b, std::uint64_t lo, std::uint64_t hi) {
  if (hi < lo) return 0.0;
  if (lo < 1) throw std::invalid_argument("shifted_power_partial_sum: lo must be >= 1");
  double sum = 0.0;
  const std::uint64_t direct_hi = std::min(hi, lo + 4 * kEmBoundary);
  for (std::uint64_t k = lo; k <= direct_hi; ++k) {
    const double kd = static_cast<double>(k);
    sum += std::pow(kd, a) * std::pow(kd + 1.0, -b);
  }
  if (direct_hi == hi) return sum;
  // k^a (k+1)^{-b} = sum_m binom(-b, m) k^{a-b-m}; k >= 257 here so six
  // terms reach well below 1e-14 relative.
  double coef = 1.0;
  for (int m = 0; m < 6; ++m) {
    if (m > 0) coef *= -(b + static_cast<double>(m - 1)) / static_cast<double>(m);
    sum += coef * power_partial_sum(b + static_cast<double>(m) - a, direct_hi + 1, hi);
  }
  return sum;
}

double shifted_power_tail_sum(double a, double b, std::uint64_t lo) {
  if (b - a <= 1.0) return kInf;
  double sum = 0.0;
  const std::uint64_t direct_hi = lo + 4 * kEmBoundary;
  for (std::uint64_t k = lo; k <= direct_hi; ++k) {
    const double kd = static_cast<double>(k);
    sum += std::pow(kd, a) * std::pow(kd + 1.0, -b);
  }
  double coef = 1.0;
  for (int m = 0; m < 6; ++m) {
    if (m > 0) coef *= -(b + static_cast<double>(m - 1)) / static_cast<double>(m);
    sum += coef * zeta_tail_asymptotic(b + static_cast<double>(m) - a,
                                       static_cast<double>(direct_hi + 1));
  }
  return sum;
}

}  // namespace ising
