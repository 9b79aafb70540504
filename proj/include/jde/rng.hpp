#pragma once

#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <limits>
#include <span>

namespace jde {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ whose state is a hash of (seed, stream, counter), so every
/// trial owns an independent sequence no matter which thread runs it.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    std::uint64_t k = seed;
    std::uint64_t key = splitmix64(k);
    k = key ^ (stream * 0xd1b54a32d192ed03ULL);
    key = splitmix64(k);
    k = key ^ (counter * 0x8cb92ba72f3d8dd7ULL);
    for (auto& w : s_) w = splitmix64(k);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
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

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

/// Standard normal variates (ziggurat) drawn from a CounterRng.
class NormalSource {
 public:
  NormalSource(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
      : rng_(seed, stream, counter) {}

  double operator()() { return dist_(rng_); }
  void fill(std::span<double> out) {
    for (double& v : out) v = dist_(rng_);
  }
  CounterRng& engine() { return rng_; }

 private:
  CounterRng rng_;
  boost::random::normal_distribution<double> dist_;
};

}  // namespace jde
