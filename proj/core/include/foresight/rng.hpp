#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace foresight {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);

// Seed for an independent stream identified by (base, tag).
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// Portable random stream. The mt19937_64 engine output is fixed by the
// standard; the distributions below are written out so results do not depend
// on the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer on [lo, hi], inclusive. Requires lo <= hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p) { return uniform() < p; }
  // Standard normal (Box-Muller, one draw per pair kept for the next call).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace foresight
