#pragma once

#include "guidance_lab/types.hpp"

#include <cstdint>
#include <limits>

namespace guidance_lab {

// Counter-based bit generator: output n is a SplitMix64 finalisation of
// (key, n). Satisfies UniformRandomBitGenerator.
class CounterEngine {
public:
    using result_type = std::uint64_t;

    explicit CounterEngine(std::uint64_t key) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

// Standard-normal draws keyed by (seed, step, substream), so a trajectory's
// noise does not depend on execution order or on how many draws other steps
// consumed.
class NoiseStream {
public:
    explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

    Vector normal(std::uint64_t step, std::uint64_t substream, std::size_t dim) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

}  // namespace guidance_lab
