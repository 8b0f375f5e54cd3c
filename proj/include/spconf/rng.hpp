#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace spconf {

/// Counter-based random stream (Philox4x32-10) keyed by (base_seed, stream_id).
///
/// The i-th block of output is a pure function of (base_seed, stream_id, i), so
/// replications can be generated in any order and still reproduce bit-for-bit.
/// Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t base_seed, std::uint64_t stream_id) noexcept;

  /// Independent child stream for a named purpose ("locations", "noise", ...).
  [[nodiscard]] RngStream substream(std::string_view purpose) const noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;
  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }
  /// Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

  [[nodiscard]] std::uint64_t base_seed() const noexcept { return base_seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  void refill() noexcept;

  std::uint64_t base_seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// SplitMix64 finalizer; used to derive keys.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace spconf
