#pragma once

#include <array>
#include <cstdint>

namespace surm {

/// splitmix64 step: state += 0x9E3779B97F4A7C15, then
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic child seed for stream `index` of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// xoshiro256** seeded by four splitmix64 outputs of `seed`.
///
/// next():  result = rotl(s1 * 5, 7) * 9
///          t = s1 << 17
///          s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl(s3, 45)
/// uniform(): top 53 bits scaled into [0, 1).
/// normal():  Box-Muller on two uniforms, u1 mapped to (0, 1]; the second
///            variate of each pair is cached.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next();
  double uniform();
  double normal();

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace surm
