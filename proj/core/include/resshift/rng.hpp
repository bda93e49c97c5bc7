#pragma once

#include <cstdint>

namespace resshift {

// Counter-based deterministic generator. Every (seed, stream, step) triple
// opens an independent sequence, so parallel chains can each own a key and
// draw without any ordering constraint between them. All distributions are
// implemented here rather than via <random> so that identical keys produce
// identical bytes on every standard library.
class Prng {
 public:
  explicit Prng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t step = 0);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();
  double uniform_in(double lo, double hi);
  // Uniform integer on [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller (second value cached).
  double normal();

  // Poisson counts; exact product method for small rates, normal
  // approximation above rate 30.
  long poisson(double rate);

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream namespaces keep independent subsystems from colliding on the same
// (seed, stream) pair. Combine with an index via stream_id().
enum class Stream : std::uint64_t {
  Generic = 0,
  Dataset = 1,
  Degrade = 2,
  TimestepDraw = 3,
  Marginal = 4,
  Chain = 5,
  Oracle = 6,
  ParamInit = 7,
  BatchPick = 8,
  Perceptual = 9,
};

std::uint64_t stream_id(Stream ns, std::uint64_t index);

inline Prng make_prng(std::uint64_t seed, Stream ns, std::uint64_t index, std::uint64_t step = 0) {
  return Prng(seed, stream_id(ns, index), step);
}

}  // namespace resshift
