#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace netmoment {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit key is the user seed; the 128-bit counter is split into a
/// 64-bit stream id (high half) and a 64-bit block position (low half), so
/// independent streams are obtained by choosing distinct stream ids rather
/// than by jumping. Satisfies UniformRandomBitGenerator with 32-bit output.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Skip `blocks` four-word blocks.
  void discard_blocks(std::uint64_t blocks) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// One ten-round bijection of `counter` under `key`. Exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// Convenience wrapper with the continuous draws the simulators need.
/// Normals use the Box-Muller transform so draws are reproducible across
/// standard libraries (std::normal_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept
      : engine_(seed, stream) {}

  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;

  Philox4x32& engine() noexcept { return engine_; }

 private:
  Philox4x32 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Stream id for a (tag, a, b) triple; used to give every replicate and
/// every regeneration attempt its own Philox stream.
std::uint64_t derive_stream(std::uint64_t tag, std::uint64_t a, std::uint64_t b = 0) noexcept;

}  // namespace netmoment
