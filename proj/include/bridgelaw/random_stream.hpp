// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random streams. Every path owns one stream keyed by
// (master_seed, stream_index); the draw sequence is a pure function of that
// pair and the position in the sequence, so results do not depend on which
// worker thread produced them.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace bridgelaw {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3", SC 2011).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// splitmix64 finalizer; used to derive per-purpose seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed for an independent family of streams, e.g. derive_seed(seed, "thm1/paths").
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return mix64(master_seed ^ mix64(h));
}

/// One random stream. Satisfies UniformRandomBitGenerator, so the standard
/// <random> distributions can draw from it directly.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : master_seed_(master_seed), stream_index_(stream_index) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if ((counter_ & 1u) == 0) refill(counter_ >> 1);
    const result_type out = buffer_[counter_ & 1u];
    ++counter_;
    return out;
  }

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(*this); }

  double exponential() { return -std::log(uniform()); }

  /// Fair random sign, +1 or -1.
  double sign() { return ((*this)() >> 63) != 0 ? 1.0 : -1.0; }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }
  /// Number of 64-bit words drawn so far.
  std::uint64_t counter() const { return counter_; }

 private:
  void refill(std::uint64_t block) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block),
                                  static_cast<std::uint32_t>(block >> 32),
                                  static_cast<std::uint32_t>(stream_index_),
                                  static_cast<std::uint32_t>(stream_index_ >> 32)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(master_seed_),
                              static_cast<std::uint32_t>(master_seed_ >> 32)};
    const auto r = Philox4x32::apply(ctr, key);
    buffer_[0] = (std::uint64_t{r[1]} << 32) | r[0];
    buffer_[1] = (std::uint64_t{r[3]} << 32) | r[2];
  }

  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  std::normal_distribution<double> normal_{};
};

inline RandomStream make_stream(std::uint64_t master_seed, std::uint64_t stream_index) {
  return RandomStream(master_seed, stream_index);
}

}  // namespace bridgelaw
