#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace kivafair {

/// splitmix64 finalizer; used to derive independent substream seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);
/// FNV-1a, stable across platforms; keys per-record seeds on string ids.
std::uint64_t stable_hash(std::string_view text);

/// Seedable generator with the variates the samplers need. Substreams are
/// obtained with `split`, which never advances the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const { return seed_; }
  Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

  double uniform();  // [0, 1)
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Gamma(shape, scale), mean shape * scale.
  double gamma(double shape, double scale);
  /// Inverse-Gamma(shape, rate): 1 / Gamma(shape, 1 / rate), mean rate / (shape - 1).
  double inv_gamma(double shape, double rate);
  double beta(double a, double b);
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace kivafair
