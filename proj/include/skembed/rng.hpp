#pragma once

#include <cmath>
#include <cstdint>

namespace skembed {

/// Counter-based pseudo-random stream in the splitmix64 family.
///
/// Every simulated path owns an independent stream derived from a master seed
/// and the path index, so results are reproducible bit-for-bit no matter how
/// paths are distributed across worker threads.
class rng_stream {
 public:
  rng_stream(std::uint64_t master_seed, std::uint64_t path_index) noexcept
      : state_(mix(master_seed ^ mix(path_index * 0x9e3779b97f4a7c15ULL))) {}

  /// Next raw 64-bit draw.
  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform draw in the open interval (0, 1).
  double uniform01() noexcept {
    // 53 mantissa bits, then nudge away from 0 so logs stay finite.
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  /// Standard normal draw (Box-Muller, one of the pair kept per call pair).
  double gaussian() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace skembed
