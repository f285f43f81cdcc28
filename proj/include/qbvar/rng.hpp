#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace qbvar {

/// Seeded random stream. Each thread owns its own instance; identical seed
/// and identical call sequence give identical draws on a given platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Child seed for an independent stream keyed by `ids` (origin, model, ...).
  static std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids);

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  double normal() { return normal_(engine_); }
  double exponential() { return -std::log(uniform()); }
  /// Gamma with the given shape and unit rate.
  double standard_gamma(double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace qbvar
