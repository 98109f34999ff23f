#include "sbm/rng.hpp"

namespace sbm {

namespace {

constexpr uint32_t kWeyl0 = 0x9E3779B9u;  // golden ratio
constexpr uint32_t kWeyl1 = 0xBB67AE85u;  // sqrt(3) - 1
constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;

// Marsaglia-Tsang ziggurat tables for the standard normal, 128 layers.
// kn: acceptance thresholds against |j| (31-bit), wn: layer widths / 2^31,
// fn: density at layer boundaries.
struct ZigguratTables {
  uint32_t kn[128];
  double wn[128];
  double fn[128];

  ZigguratTables() {
    const double m1 = 2147483648.0;  // 2^31
    double dn = 3.442619855899;
    double tn = dn;
    const double vn = 9.91256303526217e-3;  // area of each layer

    double q = vn / std::exp(-0.5 * dn * dn);
    kn[0] = static_cast<uint32_t>((dn / q) * m1);
    kn[1] = 0;
    wn[0] = q / m1;
    wn[127] = dn / m1;
    fn[0] = 1.0;
    fn[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
      dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
      kn[i + 1] = static_cast<uint32_t>((dn / tn) * m1);
      tn = dn;
      fn[i] = std::exp(-0.5 * dn * dn);
      wn[i] = dn / m1;
    }
  }
};

const ZigguratTables zig;
constexpr double kZigTail = 3.442619855899;

}  // namespace

void RngStream::refill() {
  std::array<uint32_t, 4> x{static_cast<uint32_t>(counter_),
                            static_cast<uint32_t>(counter_ >> 32), stream_[0],
                            stream_[1]};
  uint32_t k0 = key_[0];
  uint32_t k1 = key_[1];
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    const uint64_t p0 = static_cast<uint64_t>(kMul0) * x[0];
    const uint64_t p1 = static_cast<uint64_t>(kMul1) * x[2];
    x = {static_cast<uint32_t>(p1 >> 32) ^ x[1] ^ k0,
         static_cast<uint32_t>(p1),
         static_cast<uint32_t>(p0 >> 32) ^ x[3] ^ k1,
         static_cast<uint32_t>(p0)};
  }
  block_ = x;
  ++counter_;
  idx_ = 0;
}

double RngStream::normal() {
  for (;;) {
    const auto j = static_cast<int32_t>(next_u32());
    const int i = j & 127;
    const auto aj =
        static_cast<uint32_t>(j < 0 ? -static_cast<int64_t>(j) : j);
    if (aj < zig.kn[i]) return j * zig.wn[i];  // ~98% of draws

    if (i == 0) {  // tail beyond kZigTail, Marsaglia's exact method
      double x, y;
      do {
        x = -std::log(uniform_pos()) / kZigTail;
        y = -std::log(uniform_pos());
      } while (y + y < x * x);
      return j > 0 ? kZigTail + x : -(kZigTail + x);
    }

    const double x = j * zig.wn[i];
    if (zig.fn[i] + uniform() * (zig.fn[i - 1] - zig.fn[i]) <
        std::exp(-0.5 * x * x)) {
      return x;
    }
  }
}

uint64_t derive_seed(uint64_t seed, std::string_view tag) {
  uint64_t h = 0xcbf29ce484222325ull ^ seed;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  // splitmix64 finalizer decorrelates nearby seeds
  h += 0x9e3779b97f4a7c15ull;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
  return h ^ (h >> 31);
}

}  // namespace sbm
