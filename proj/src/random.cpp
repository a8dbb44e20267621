#include "vbtrack/random.hpp"

namespace vbtrack {

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t run, std::uint64_t step,
                          DrawPurpose purpose) noexcept
{
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ run);
    h = mix64(h ^ step);
    h = mix64(h ^ static_cast<std::uint64_t>(purpose));
    return h;
}

Rng make_stream(std::uint64_t seed, std::uint64_t run, std::uint64_t step, DrawPurpose purpose)
{
    const std::uint64_t s = stream_seed(seed, run, step, purpose);
    // seed_seq spreads the key hash over the full Mersenne state.
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(mix64(s)),
                      static_cast<std::uint32_t>(mix64(s) >> 32)};
    return Rng(seq);
}

}  // namespace vbtrack
