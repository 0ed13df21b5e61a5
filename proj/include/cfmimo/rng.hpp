#pragma once

#include <cstdint>
#include <initializer_list>

namespace cfmimo {

/// Purpose tags for deriving independent random sub-streams. Every stochastic
/// draw in the simulator lives on a stream keyed by
/// (scenario seed, drop, purpose, user, node, time tag, ...), so results do
/// not depend on evaluation order and parallel runs reproduce serial ones.
namespace rng_purpose {
inline constexpr std::uint64_t user_drop = 0x11;
inline constexpr std::uint64_t los_assign = 0x12;
inline constexpr std::uint64_t shadowing = 0x13;
inline constexpr std::uint64_t phase_misalignment = 0x14;
inline constexpr std::uint64_t schedule = 0x15;
inline constexpr std::uint64_t position_error = 0x16;
inline constexpr std::uint64_t rp_error = 0x17;
} // namespace rng_purpose

/// Counter-seeded xoshiro256++ stream. Streams are cheap value types; derive
/// one per (drop, purpose, entity) and draw sequentially within it.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed);

    /// Derive a stream from a root seed and a key path. Identical paths give
    /// identical streams; distinct paths give statistically independent ones.
    static RngStream from_path(std::uint64_t root, std::initializer_list<std::uint64_t> path);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    double uniform();
    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller (two uniforms per draw).
    double normal();
    /// Unbiased uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

  private:
    std::uint64_t state_[4];
};

/// SplitMix64 mixing step, exposed for hashing-style key derivation.
std::uint64_t splitmix64(std::uint64_t x);

} // namespace cfmimo
