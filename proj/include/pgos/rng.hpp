#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pgos {

/// Deterministic seeded random stream. Every source of randomness in the
/// project flows through one of these; independent sub-streams are derived
/// by hashing the parent seed with a label and indices, so results do not
/// depend on evaluation order between unrelated components.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  /// Child stream keyed by a label and up to three indices.
  RngStream derive(std::string_view label, std::uint64_t a = 0,
                   std::uint64_t b = 0, std::uint64_t c = 0) const;

  double uniform01();
  double uniform(double lo, double hi);
  double normal();                       // standard normal
  double normal(double mu, double sigma);
  std::uint64_t uniform_u64(std::uint64_t lo, std::uint64_t hi);  // inclusive
  int uniform_int(int lo, int hi);                                // inclusive
  bool bernoulli(double p);

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

/// splitmix64 finalizer; used for seed derivation and config hashing.
std::uint64_t mix64(std::uint64_t x);

}  // namespace pgos
