#pragma once

#include <cmath>
#include <cstdint>

namespace ofmlmc {

//! SplitMix64 finalizer; used to hash sample keys into stream keys.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! Stable 64-bit stream id for (campaign seed, difference level, sample index).
//! The mapping is the backbone of reproducibility: a sample's randomness is a
//! pure function of its key, independent of scheduling or worker count.
inline std::uint64_t derive_stream_id(std::uint64_t campaign_seed,
                                      std::uint64_t level,
                                      std::uint64_t index) {
  std::uint64_t h = mix64(campaign_seed);
  h = mix64(h ^ (0x1ed0975cu + level));
  h = mix64(h ^ index);
  return h;
}

//! Counter-based Philox4x32-10 stream (Salmon et al., SC'11).
//!
//! Value semantics: copying a stream copies its position. `substream(id)`
//! returns an independent stream under the same key, so model code can assign
//! a fixed substream to each logical draw site (documented draw order) and
//! coupled fine/coarse evaluations of the same sample see identical noise.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key, std::uint64_t substream_id = 0)
      : key_(key), hi_(substream_id) {}

  std::uint64_t key() const { return key_; }

  RandomStream substream(std::uint64_t id) const { return RandomStream(key_, id); }

  std::uint64_t next_u64() {
    if (buffered_ == 0) refill();
    return buf_[--buffered_];
  }

  //! Uniform draw strictly inside (0, 1).
  double uniform() {
    const std::uint64_t r = next_u64();
    return (static_cast<double>(r >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  //! Standard normal via Box-Muller; pairs are cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    cached_ = r * std::sin(two_pi * u2);
    have_cached_ = true;
    return r * std::cos(two_pi * u2);
  }

 private:
  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                      std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
  }

  void refill() {
    std::uint32_t c[4] = {static_cast<std::uint32_t>(lo_),
                          static_cast<std::uint32_t>(lo_ >> 32),
                          static_cast<std::uint32_t>(hi_),
                          static_cast<std::uint32_t>(hi_ >> 32)};
    std::uint32_t k[2] = {static_cast<std::uint32_t>(key_),
                          static_cast<std::uint32_t>(key_ >> 32)};
    for (int round = 0; round < 10; ++round) {
      std::uint32_t lo0, hi0, lo1, hi1;
      mulhilo(0xD2511F53u, c[0], lo0, hi0);
      mulhilo(0xCD9E8D57u, c[2], lo1, hi1);
      const std::uint32_t n0 = hi1 ^ c[1] ^ k[0];
      const std::uint32_t n2 = hi0 ^ c[3] ^ k[1];
      c[0] = n0;
      c[1] = lo1;
      c[2] = n2;
      c[3] = lo0;
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    buf_[0] = (static_cast<std::uint64_t>(c[1]) << 32) | c[0];
    buf_[1] = (static_cast<std::uint64_t>(c[3]) << 32) | c[2];
    buffered_ = 2;
    ++lo_;  // 2^64 blocks per substream
  }

  std::uint64_t key_;
  std::uint64_t hi_ = 0;
  std::uint64_t lo_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int buffered_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace ofmlmc
