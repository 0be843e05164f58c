#pragma once

#include <cstdint>

namespace ising {

// Counter-based RNG. Every draw is a stateless mix of (key, counter), so a
// stream is fully determined by its key and independent streams can be handed
// to workers in any order without changing the numbers they produce.
namespace detail {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Stream identifiers keep substreams from distinct subsystems disjoint.
enum class Stream : std::uint64_t {
  Evolve = 1,
  Magnetization = 2,
  Spine = 3,
  GaltonWatson = 4,
  ConfigModel = 5,
  Glauber = 6,
  Oracle = 7,
  Generic = 8,
};

/// Derives a stream key from a master seed plus up to three context words.
inline constexpr std::uint64_t derive_key(std::uint64_t seed, Stream stream,
                                          std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t k = detail::mix64(seed ^ 0x6a09e667f3bcc908ULL);
  k = detail::mix64(k ^ static_cast<std::uint64_t>(stream));
  k = detail::mix64(k ^ a);
  k = detail::mix64(k ^ b);
  return k;
}

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~static_cast<result_type>(0); }

  result_type operator()() { return detail::mix64(key_ ^ counter_++); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) {
    // n == 0 is a caller bug; keep the check light.
    while (true) {
      std::uint64_t x = (*this)();
      unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
      std::uint64_t lo = static_cast<std::uint64_t>(m);
      if (lo >= n) return static_cast<std::uint64_t>(m >> 64);
      // Rejection zone: only reached with probability (2^64 mod n) / 2^64.
      std::uint64_t t = (-n) % n;
      if (lo >= t) return static_cast<std::uint64_t>(m >> 64);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ising
