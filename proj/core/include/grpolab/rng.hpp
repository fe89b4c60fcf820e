#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace grpolab {

// Counter-free splittable RNG built on the splitmix64 finalizer.
//
// Reproducibility contract: every consumer derives its stream from a key
// tuple such as (run seed, step, question index), never from a shared
// sequential generator. That makes results independent of evaluation order
// and worker count. All variate transforms are implemented here (not via
// <random> distributions, whose output is implementation-defined).
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : state_(mix(seed)) {}

  // Hash a key tuple into an independent stream.
  static RngStream from_key(std::initializer_list<std::uint64_t> words) {
    std::uint64_t acc = 0x7b1ff0702e014c97ULL;
    for (std::uint64_t w : words) acc = mix(acc ^ mix(w));
    RngStream s(0);
    s.state_ = acc;
    return s;
  }

  // Derive a child stream without disturbing this one.
  RngStream substream(std::uint64_t word) const {
    return from_key({state_, 0x9e6c63d0876a9a35ULL, word});
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix_raw(state_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe to feed std::log.
  double next_open_unit() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (two uniforms per variate, stateless).
  double next_gaussian() {
    const double u1 = next_open_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [0, bound) via 128-bit multiply. bound > 0.
  std::uint64_t next_index(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    return mix_raw(z);
  }
  static std::uint64_t mix_raw(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace grpolab
