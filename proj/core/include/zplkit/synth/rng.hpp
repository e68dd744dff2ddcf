#pragma once

#include <array>
#include <cstdint>

namespace zplkit::synth {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit seed is the key; `stream` occupies the upper counter words, so
/// (seed, stream) pairs give independent sequences. Output block n is
/// philox(key = seed, counter = {n_lo, n_hi, stream_lo, stream_hi}), consumed
/// word 0 first. Everything below is defined in terms of that word stream:
///
///   uniform():  u = ((a >> 5) * 2^26 + (b >> 6) + 0.5) / 2^53, a then b
///   normal():   Box-Muller on two uniforms, cos branch returned first
///   poisson():  Knuth's product method for mean < 10, else Hoermann's PTRS
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0);

  /// The raw bijection: ten rounds on `counter` under `key`.
  static Block block(Block counter, std::array<std::uint32_t, 2> key);

  std::uint32_t next_u32();
  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform();
  double normal();
  std::uint64_t poisson(double mean);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Block buf_{};
  int pos_ = 4;
  bool have_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace zplkit::synth
