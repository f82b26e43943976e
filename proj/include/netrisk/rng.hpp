#pragma once

#include <cmath>
#include <cstdint>

#include "netrisk/error.hpp"

namespace netrisk {

/// Deterministic counter-friendly RNG built on splitmix64.
///
/// Every stochastic routine in the library takes either an Rng or a 64-bit
/// seed from which streams are derived by counter. Independent streams for
/// parallel work come from Rng::stream(seed, stream_id), so results do not
/// depend on thread count or draw interleaving.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed + 0x9E3779B97F4A7C15ULL)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    Rng r(0);
    r.state_ = mix(mix(seed + 0x9E3779B97F4A7C15ULL) ^ mix(stream_id + 0xD1B54A32D192ED03ULL));
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer uniform on [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection-free modulo is fine here: n is tiny relative to 2^64.
    return next_u64() % n;
  }

  /// Standard normal via Box-Muller (pair cached).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma(shape, 1) via Marsaglia-Tsang, with the shape<1 boost.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma shape must be positive");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  /// Inverse-Gamma(shape, scale): mean = scale / (shape - 1) for shape > 1.
  double inverse_gamma(double shape, double scale) { return scale / gamma(shape); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace netrisk
