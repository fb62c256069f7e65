#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace dpl {

// SplitMix64 step. Used for seed derivation only; reference outputs are
// pinned in the test suite.
std::uint64_t splitmix64(std::uint64_t& state);

// Derives an independent stream seed from a base seed and a list of tags
// (timestep bits, candidate index, stream id). Order of tags matters.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

inline std::uint64_t bits_of(double value) { return std::bit_cast<std::uint64_t>(value); }

// Stream identifiers for the different consumers of the master seed.
enum class Stream : std::uint64_t {
  Sampling = 0x53414d50,
  Estimator = 0x45535449,
  RotationResiduals = 0x524f5452,
  Scenario = 0x5343454e,
};

// mt19937_64 with portable real-valued draws. The standard library
// distributions are implementation-defined, so uniform and normal variates
// are derived here from the raw 64-bit output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace dpl
