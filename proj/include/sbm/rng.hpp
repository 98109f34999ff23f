#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace sbm {

// Philox 4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw 2011).
// A stream is identified by (seed, stream_id); outputs depend only on that
// identity and the draw counter, so replica k regenerates the exact same
// sequence under any thread schedule. 2^66 32-bit draws per stream.
class RngStream {
 public:
  using result_type = uint32_t;

  explicit RngStream(uint64_t seed, uint64_t stream_id = 0)
      : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
        stream_{static_cast<uint32_t>(stream_id),
                static_cast<uint32_t>(stream_id >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }
  result_type operator()() { return next_u32(); }

  uint32_t next_u32() {
    if (idx_ == 4) refill();
    return block_[idx_++];
  }

  uint64_t next_u64() {
    uint64_t lo = next_u32();
    uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // uniform on [0,1), 53-bit resolution
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform on (0,1); safe under log()
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  // unbiased integer in [0,k), k >= 1 (Lemire multiply-shift with rejection)
  uint32_t below(uint32_t k) {
    uint64_t m = static_cast<uint64_t>(next_u32()) * k;
    auto lo = static_cast<uint32_t>(m);
    if (lo < k) {
      const uint32_t floor = (0u - k) % k;
      while (lo < floor) {
        m = static_cast<uint64_t>(next_u32()) * k;
        lo = static_cast<uint32_t>(m);
      }
    }
    return static_cast<uint32_t>(m >> 32);
  }

  double normal();  // standard normal via 128-layer ziggurat

 private:
  void refill();

  std::array<uint32_t, 2> key_;
  std::array<uint32_t, 2> stream_;
  uint64_t counter_ = 0;
  std::array<uint32_t, 4> block_{};
  int idx_ = 4;
};

// Replica k of a run seeded with `seed` draws from this stream and no other.
inline RngStream derive_stream(uint64_t seed, uint64_t replica_index) {
  return RngStream(seed, replica_index);
}

// Stable sub-seed for a named experiment stage (FNV-1a then splitmix64 finalizer).
uint64_t derive_seed(uint64_t seed, std::string_view tag);

}  // namespace sbm
