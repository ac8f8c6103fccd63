#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace mss {

// Finalizer of the splitmix64 generator; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

// Derives an independent stream seed from a base seed and an index path
// (e.g. {purpose, replicate, tensor}).  Deterministic, order-sensitive, and
// collision-resistant, so parallel workers can seed their own streams
// without coordinating.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

// xoshiro256++ with splitmix64 seeding and polar-method normals.  Used
// instead of <random> distributions so streams are identical across
// platforms and standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t u64();
  double uniform();                      // [0, 1)
  double uniform(double a, double b);    // [a, b)
  std::int64_t uniform_int(std::int64_t n);  // [0, n), n >= 1
  double normal();                       // standard normal
  void fill_normal(double* dst, std::size_t n);

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mss
