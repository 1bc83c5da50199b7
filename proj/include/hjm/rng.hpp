#pragma once

#include <cmath>
#include <cstdint>

namespace hjm {

// Counter-based generator: each draw is SplitMix64 applied to a fresh
// counter, keyed by (seed, stream). Draw k of stream s is the same no
// matter what any other stream did, which keeps per-chain and per-patient
// randomness independent of scheduling.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL))) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  // uniform on (0, 1); never returns an exact endpoint
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();  // inverse-CDF transform

  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Inverse of the standard normal CDF (Acklam's rational approximation
// polished with one Halley step); |error| < 1e-15 over (0, 1).
double inverse_normal_cdf(double p);

// Standard normal CDF via erfc.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double Rng::normal() { return inverse_normal_cdf(uniform()); }

}  // namespace hjm
