// Copyright 2026 The coper Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Seeding and stream-splitting rules shared by every sampler in the library.
//
// All randomness is drawn from SplitMix64 streams. A stream is identified by
// a 64-bit key derived from the user seed and a path of integer labels
// (row index, mask index, trial index, ...) via `derive_seed`. Gaussian
// variates come from Boost's ziggurat normal_distribution, whose tables are
// compiled constants, so a given key reproduces the same values on any
// platform with IEEE doubles.

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace coper {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// SplitMix64 (Steele, Lea, Flood 2014). Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t key = 0) noexcept : state_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
  }

 private:
  std::uint64_t state_;
};

/// Key for the sub-stream labelled by `path` under `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t key = splitmix64_mix(seed ^ 0x6a09e667f3bcc908ULL);
  for (std::uint64_t label : path) {
    key = splitmix64_mix(key + 0x9e3779b97f4a7c15ULL * (label + 1));
  }
  return key;
}

/// Standard normal source over a SplitMix64 stream.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t key) : engine_(key) {}

  double operator()() { return dist_(engine_); }
  double uniform() { return uniform_(engine_); }
  SplitMix64& engine() noexcept { return engine_; }

 private:
  SplitMix64 engine_;
  boost::random::normal_distribution<double> dist_{0.0, 1.0};
  boost::random::uniform_01<double> uniform_;
};

}  // namespace coper
