#pragma once

#include <cstdint>

namespace llpb {

/// Counter-based generator: output k of stream `key` is splitmix64(key + k*phi).
/// Streams are stateless apart from the counter, so a trajectory's draws do
/// not depend on which thread runs it or on what other trajectories drew.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  explicit CounterRng(std::uint64_t key = 0) : key_(key) {}

  static std::uint64_t mix(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t next_u64() { return mix(key_ + (counter_++) * kGolden); }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Independent stream derived from this one's key.
  CounterRng substream(std::uint64_t id) const { return CounterRng(mix(key_ ^ mix(id + 1))); }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace llpb
