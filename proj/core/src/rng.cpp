#include "resshift/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace resshift {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Prng::Prng(std::uint64_t seed, std::uint64_t stream, std::uint64_t step) {
  std::uint64_t s = mix(seed + kGamma);
  s = mix(s ^ (stream + kGamma));
  s = mix(s ^ (step + kGamma));
  state_ = s;
}

std::uint64_t Prng::next_u64() {
  state_ += kGamma;
  return mix(state_);
}

double Prng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Prng::uniform_in(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t Prng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Prng::uniform_index: n must be positive");
  // multiply-shift; bias is negligible for the n used here
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double Prng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

long Prng::poisson(double rate) {
  if (!(rate > 0.0)) return 0;
  if (rate < 30.0) {
    // Knuth product-of-uniforms
    const double limit = std::exp(-rate);
    long k = 0;
    double prod = 1.0;
    do {
      ++k;
      prod *= uniform();
    } while (prod > limit);
    return k - 1;
  }
  const double draw = rate + std::sqrt(rate) * normal();
  return draw < 0.0 ? 0 : static_cast<long>(std::llround(draw));
}

std::uint64_t stream_id(Stream ns, std::uint64_t index) {
  return (static_cast<std::uint64_t>(ns) << 48) | (index & 0x0000FFFFFFFFFFFFULL);
}

}  // namespace resshift
