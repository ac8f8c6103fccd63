#include "mss/rng.hpp"

#include <cmath>

#include "mss/error.hpp"

namespace mss {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t x = mix64(base + kGolden);
  for (std::uint64_t p : path) x = mix64(x ^ mix64(p + kGolden));
  return x;
}

Rng::Rng(std::uint64_t seed) {
  // splitmix64 expansion; guarantees a nonzero xoshiro state.
  std::uint64_t st = seed;
  for (auto& w : s_) {
    st += kGolden;
    w = mix64(st);
  }
}

std::uint64_t Rng::u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) {
  return a + (b - a) * uniform();
}

std::int64_t Rng::uniform_int(std::int64_t n) {
  if (n < 1) throw ValidationError("uniform_int: n must be >= 1");
  // Rejection sampling over the largest multiple of n, unbiased.
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % un + 1) % un;
  std::uint64_t x;
  do {
    x = u64();
  } while (x > limit);
  return static_cast<std::int64_t>(x % un);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double v1, v2, s;
  do {
    v1 = 2.0 * uniform() - 1.0;
    v2 = 2.0 * uniform() - 1.0;
    s = v1 * v1 + v2 * v2;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v2 * f;
  has_spare_ = true;
  return v1 * f;
}

void Rng::fill_normal(double* dst, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = normal();
}

}  // namespace mss
