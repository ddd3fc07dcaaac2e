#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace ibridges {

/// Philox4x32-10 counter-based generator.  The 64-bit seed is the key, the
/// 64-bit stream id occupies the upper half of the 128-bit counter, and the
/// lower half counts blocks.  Distinct (seed, stream_id) pairs therefore
/// index disjoint parts of the generator's output space.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block encrypt(Block ctr, Key key) {
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

/// Reproducible random stream.  Copying a stream copies its position, so a
/// copy replays the same sequence.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// A child stream whose id mixes this stream's id with `tag`.  Used to give
  /// each replica or sub-check its own stream under one seed.
  RngStream substream(std::uint64_t tag) const { return RngStream(seed_, mix(stream_id_ ^ mix(tag + 1))); }

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }
  std::uint64_t operator()() { return next_u64(); }

  std::uint64_t next_u64() {
    if (used_ >= 2) refill();
    const std::uint64_t hi = buffer_[2 * used_];
    const std::uint64_t lo = buffer_[2 * used_ + 1];
    ++used_;
    return (hi << 32) | lo;
  }

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  void refill() {
    const Philox4x32::Block ctr = {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                   static_cast<std::uint32_t>(stream_id_),
                                   static_cast<std::uint32_t>(stream_id_ >> 32)};
    const Philox4x32::Key key = {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    buffer_ = Philox4x32::encrypt(ctr, key);
    ++block_;
    used_ = 0;
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  Philox4x32::Block buffer_{};
  int used_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ibridges
