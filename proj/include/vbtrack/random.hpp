#pragma once

#include <cstdint>
#include <random>

namespace vbtrack {

/// What a random stream is used for. Part of the stream key so that, e.g.,
/// the clutter draws of a step never shift when the detection draws change.
enum class DrawPurpose : std::uint64_t {
    ProcessNoise = 1,
    MeasurementNoise = 2,
    Detection = 3,
    Clutter = 4,
    Shuffle = 5,
    FreeEnergy = 6,
    Benchmark = 7,
    TestData = 8,
    Outlier = 9,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Hash of (seed, run, step, purpose). Distinct keys give independent
/// streams no matter in which order or on which thread they are created.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t run, std::uint64_t step,
                          DrawPurpose purpose) noexcept;

using Rng = std::mt19937_64;

Rng make_stream(std::uint64_t seed, std::uint64_t run, std::uint64_t step, DrawPurpose purpose);

}  // namespace vbtrack
