#include "guidance_lab/noise.hpp"

#include <random>

namespace guidance_lab {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

CounterEngine::result_type CounterEngine::operator()() {
    return mix64(key_ ^ mix64(counter_++));
}

Vector NoiseStream::normal(std::uint64_t step, std::uint64_t substream, std::size_t dim) const {
    const std::uint64_t key = mix64(mix64(mix64(seed_) ^ step) ^ (substream * 0xd6e8feb86659fd93ULL));
    CounterEngine engine(key);
    std::normal_distribution<double> dist(0.0, 1.0);
    Vector out(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = dist(engine);
    return out;
}

}  // namespace guidance_lab
