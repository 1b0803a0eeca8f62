#pragma once

#include <cmath>
#include <cstdint>

namespace ssmup {

// Counter-based, splittable pseudo-random stream (SplitMix64 family).
// Every particle, chain and archive row gets its own substream, so results
// do not depend on evaluation order or thread schedule.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed) : key_(mix64(seed ^ 0x5851f42d4c957f2dULL)), ctr_(0) {}

  // Independent child stream; deterministic in (parent key, id).
  RngStream substream(std::uint64_t id) const {
    RngStream s;
    s.key_ = mix64(key_ + mix64(id ^ 0x9e3779b97f4a7c15ULL));
    s.ctr_ = 0;
    return s;
  }

  std::uint64_t next_u64() {
    ctr_ += 0x9e3779b97f4a7c15ULL;
    return mix64(key_ ^ ctr_);
  }

  // Strictly inside (0, 1); safe as log() argument.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t ctr_;
};

}  // namespace ssmup
