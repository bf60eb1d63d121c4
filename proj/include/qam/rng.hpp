#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace qam {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless: every
/// output block is a pure function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }
};

/// Per-path noise stream keyed by (seed, stream id). Draw number k of a stream
/// depends only on (seed, stream, k), never on scheduling.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

  /// Two independent standard normals for pair index j (Box-Muller).
  std::array<double, 2> normal_pair(std::uint64_t j) const {
    const auto w = raw(j);
    const double u1 = to_unit(w[0], w[1]);
    const double u2 = to_unit(w[2], w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  /// Uniform draw in (0, 1) at index j.
  double uniform(std::uint64_t j) const {
    const auto w = raw(j);
    return to_unit(w[0], w[1]);
  }

  std::uint64_t stream() const { return stream_; }

 private:
  Philox4x32::Counter raw(std::uint64_t j) const {
    return Philox4x32::block({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j >> 32),
                              static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                             key_);
  }

  // 53-bit mantissa, offset by half an ulp so the result is never 0 or 1.
  static double to_unit(std::uint32_t lo, std::uint32_t hi) {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
};

}  // namespace qam
