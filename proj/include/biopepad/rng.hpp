#pragma once

#include <cmath>
#include <cstdint>

namespace biopepad {

/// Counter-based splitmix64 stream: the i-th draw is a pure function of
/// (seed, i), so identical (seed, counter) always replays identically and
/// streams can be split without sharing state.
class RngStream {
public:
    static constexpr const char* kAlgorithm = "splitmix64";

    explicit RngStream(std::uint64_t seed) : seed_(seed) {}

    /// Independent per-run stream: the run index is mixed into the base
    /// seed, so ensembles are reproducible for any job count.
    static RngStream for_run(std::uint64_t base_seed, std::uint64_t run_index) {
        return RngStream(mix(base_seed + mix(run_index + 1)));
    }

    std::uint64_t next_u64() { return mix(seed_ + ++counter_ * 0x9e3779b97f4a7c15ull); }

    /// Uniform on (0, 1]; never returns 0, so logs stay finite.
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log(next_unit()) / rate; }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t draws() const { return counter_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace biopepad
