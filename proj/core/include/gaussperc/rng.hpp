#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace gaussperc {

/// Addresses one independent random stream: a 64-bit seed (the Philox key)
/// and a 64-bit stream id (the upper half of the Philox counter). The lower
/// half of the counter is the position inside the stream.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  friend bool operator==(const RngState&, const RngState&) = default;
};

// Stream namespaces so that different consumers of one seed never overlap.
enum class StreamTag : std::uint64_t {
  field = 1,
  bernoulli = 2,
  sites = 3,
  bootstrap = 4,
  property = 5,
};

/// Stream id for trial `trial` of consumer `tag`.
constexpr std::uint64_t stream_id(StreamTag tag, std::uint64_t trial) {
  return (static_cast<std::uint64_t>(tag) << 56) ^ trial;
}

/// Philox4x32-10 counter-based generator (Salmon et al. 2011 constants).
/// Satisfies UniformRandomBitGenerator with 32-bit output.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(RngState state, std::uint64_t position = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  /// Raw block function: 10 rounds of Philox on (counter, key).
  static Block block(Block counter, std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t position_;
  Block buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Uniform on [0, 1) addressed directly by (state, counter); used for lattice
/// sites whose value must not depend on visitation order.
double uniform_at(RngState state, std::uint64_t counter);

}  // namespace gaussperc
