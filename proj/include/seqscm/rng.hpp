#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace seqscm {

// 64-bit FNV-1a. Used to fold strings (variable names, mode tags) into seed
// material.
std::uint64_t fnv1a64(std::string_view text);

std::uint64_t splitmix64(std::uint64_t x);

// Folds a sequence of 64-bit words into one seed. Order-sensitive, so
// derive_seed({a, b}) != derive_seed({b, a}).
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

// Deterministic RNG stream. mt19937_64 is fully specified by the standard,
// so identical seeds give identical draws on every platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01();

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

// Inverse-CDF draw from an explicit probability vector. Kept independent of
// std::discrete_distribution, whose algorithm is implementation-defined.
std::size_t sample_index(const std::vector<double>& probabilities, RngStream& rng);

}  // namespace seqscm
