#pragma once

#include <cstdint>
#include <vector>

namespace ising {

/// Hurwitz zeta: sum_{k>=q} k^{-s} for s > 1, q >= 1.
/// Direct summation up to a fixed boundary plus an Euler-Maclaurin tail;
/// accurate to ~1e-15 relative for the parameter ranges used here.
double hurwitz_zeta(double s, double q);

/// Euler-Maclaurin asymptotic for the zeta tail starting at q (q >= 16).
/// Also valid as the analytic continuation for s < 1, which makes
/// partial power sums expressible as differences.
double zeta_tail_asymptotic(double s, double q);

/// sum_{k=lo}^{hi} k^{-s} for any real s (lo >= 1). Exact summation for the
/// small-k range, Euler-Maclaurin differences beyond.
double power_partial_sum(double s, std::uint64_t lo, std::uint64_t hi);

/// sum_{k=lo}^{hi} k^a (k+1)^{-b}, with hi possibly huge; uses the binomial
/// expansion of (1+1/k)^{-b} once k is large. Requires lo >= 1.
double shifted_power_partial_sum(double a, double b, std::uint64_t lo, std::uint64_t hi);

/// sum_{k>=lo} k^a (k+1)^{-b}; requires b - a > 1.
double shifted_power_tail_sum(double a, double b, std::uint64_t lo);

}  // namespace ising
