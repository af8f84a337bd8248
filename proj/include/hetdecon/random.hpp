#pragma once

#include "fourier.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace hetdecon {

//! Philox4x32-10 counter-based generator (Salmon et al., Random123).
//!
//! The 64-bit key is the user seed; the upper half of the 128-bit counter
//! selects an independent stream (one per Monte Carlo replication) and the
//! lower half counts blocks within the stream. Satisfies
//! UniformRandomBitGenerator.
class Philox4x32
{
public:
  using result_type = std::uint32_t;
  using counter_type = std::array<std::uint32_t, 4>;
  using key_type = std::array<std::uint32_t, 2>;

  static constexpr const char* algorithm_name = "philox4x32-10";

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0)
    : key_{ static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32) }
    , counter_{ 0, 0, static_cast<std::uint32_t>(stream),
                static_cast<std::uint32_t>(stream >> 32) }
  {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()()
  {
    if (index_ == 4) {
      block_ = generate(counter_, key_);
      if (++counter_[0] == 0)
        ++counter_[1];
      index_ = 0;
    }
    return block_[index_++];
  }

  //! The raw bijection, exposed for known-answer tests.
  static counter_type generate(counter_type ctr, key_type key)
  {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      std::uint64_t p0 = std::uint64_t{ 0xD2511F53u } * ctr[0];
      std::uint64_t p1 = std::uint64_t{ 0xCD9E8D57u } * ctr[2];
      auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      auto lo0 = static_cast<std::uint32_t>(p0);
      auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = { hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0 };
    }
    return ctr;
  }

private:
  key_type key_;
  counter_type counter_;
  counter_type block_{};
  int index_ = 4;
};

//! Uniform double in the open interval (0, 1) with 53 random bits.
template<class Engine>
double uniform_open(Engine& rng)
{
  std::uint64_t a = rng() >> 5; // 27 bits
  std::uint64_t b = rng() >> 6; // 26 bits
  return (static_cast<double>((a << 26) | b) + 0.5) * 0x1.0p-53;
}

//! Box-Muller standard normal draws; the second variate of each pair is
//! cached.
class NormalSampler
{
public:
  template<class Engine>
  double operator()(Engine& rng)
  {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform_open(rng);
    double u2 = uniform_open(rng);
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

//! Per-stream sampling state: the engine plus the normal cache.
struct RandomStream
{
  Philox4x32 engine;
  NormalSampler normal_sampler;

  explicit RandomStream(std::uint64_t seed = 0, std::uint64_t stream = 0)
    : engine(seed, stream)
  {}

  double uniform() { return uniform_open(engine); }
  double normal() { return normal_sampler(engine); }
};

} // namespace hetdecon
