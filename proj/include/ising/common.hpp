#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ising {

// ---------------------------------------------------------------------------
// Errors

struct NonConvergence : std::runtime_error {
  NonConvergence(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), exi_trace(std::move(trace)) {}
  std::vector<double> exi_trace;  // per-iteration E[xi(h)]
};

struct FitRejected : std::runtime_error {
  explicit FitRejected(const std::string& what, double r2 = 0.0)
      : std::runtime_error(what), r_squared(r2) {}
  double r_squared;
};

struct SizeCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Worker pool size. Set once by the CLI (or tests); all data-parallel loops
// read it. Results are independent of the value by construction.

int default_workers();
void set_default_workers(int n);

/// Runs fn(lo, hi) over a partition of [0, n) on `workers` threads.
/// Chunk boundaries depend only on n and workers, and every write must go to
/// a distinct index, so output is identical for every worker count.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t, std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Deterministic reductions and small statistics helpers

/// Pairwise summation over a fixed binary tree; independent of worker count
/// because it always runs over the materialized array in index order.
double pairwise_sum(std::span<const double> v);

inline double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

/// Standard error of the mean via delete-block jackknife.
double jackknife_se(std::span<const double> v, int n_blocks = 100);

/// Two-sample Kolmogorov-Smirnov distance; both inputs must be sorted.
double ks_distance_sorted(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Misc

inline bool is_finite(double x) { return std::isfinite(x); }

/// FNV-1a 64-bit hash, used for config provenance stamps.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Inline implementations

inline int g_workers_storage(int set = -1) {
  static int workers = 1;
  if (set > 0) workers = set;
  return workers;
}

inline int default_workers() { return g_workers_storage(); }
inline void set_default_workers(int n) { g_workers_storage(n > 0 ? n : 1); }

inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t w = workers <= 0 ? 1 : static_cast<std::size_t>(workers);
  w = std::min<std::size_t>(w, n);
  if (w == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(w);
  const std::size_t chunk = (n + w - 1) / w;
  for (std::size_t t = 0; t < w; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : threads) th.join();
}

inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double jackknife_se(std::span<const double> v, int n_blocks) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(n_blocks), n);
  const double total = pairwise_sum(v);
  std::vector<double> leave_out(nb);
  const std::size_t chunk = (n + nb - 1) / nb;
  std::size_t used = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = b * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) {
      leave_out[b] = total / static_cast<double>(n);
      continue;
    }
    const double block = pairwise_sum(v.subspan(lo, hi - lo));
    leave_out[b] = (total - block) / static_cast<double>(n - (hi - lo));
    ++used;
  }
  const double m = pairwise_sum(leave_out) / static_cast<double>(nb);
  double ss = 0.0;
  for (double x : leave_out) ss += (x - m) * (x - m);
  const double g = static_cast<double>(used > 1 ? used : 2);
  return std::sqrt((g - 1.0) / g * ss);
}

inline double ks_distance_sorted(std::span<const double> a, std::span<const double> b) {
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    // Advance past the full tied block on both sides before measuring.
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace ising
