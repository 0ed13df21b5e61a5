#include "cfmimo/rng.hpp"

#include <cmath>

namespace cfmimo {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k)
{
    return (x << k) | (x >> (64 - k));
}

} // namespace

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed)
{
    // Expand the seed into four nonzero state words.
    std::uint64_t s = seed;
    for (auto& w : state_) {
        s = splitmix64(s);
        w = s;
    }
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) {
        state_[0] = 1;
    }
}

RngStream RngStream::from_path(std::uint64_t root, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t key = splitmix64(root);
    for (std::uint64_t word : path) {
        key = splitmix64(key ^ (word + 0x9e3779b97f4a7c15ULL));
    }
    return RngStream(key);
}

std::uint64_t RngStream::next_u64()
{
    // xoshiro256++
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double RngStream::uniform()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

double RngStream::normal()
{
    // Box-Muller; u1 shifted away from zero so the log stays finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

std::uint64_t RngStream::below(std::uint64_t n)
{
    if (n <= 1) {
        return 0;
    }
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v = next_u64();
    while (v >= limit) {
        v = next_u64();
    }
    return v % n;
}

} // namespace cfmimo
