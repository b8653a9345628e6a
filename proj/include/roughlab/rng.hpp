#pragma once

#include <cstdint>
#include <random>

namespace roughlab {

// Keyed random streams: every (seed, stream, index) triple owns an independent
// engine, so parallel consumers get identical draws regardless of scheduling.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
    h = splitmix64(h ^ splitmix64(stream));
    h = splitmix64(h ^ splitmix64(index));
    return h;
}

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
        : engine_(mix_key(seed, stream, index)) {}

    double uniform() { return uni_(engine_); }
    double uniform(double a, double b) { return a + (b - a) * uni_(engine_); }
    double gaussian() { return normal_(engine_); }
    std::uint64_t bits() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uni_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace roughlab
