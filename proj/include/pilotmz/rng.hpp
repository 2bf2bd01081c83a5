#pragma once

#include <cstdint>
#include <random>

namespace pilotmz {

/// Counter-based stream derivation: every trajectory gets its own engine
/// seeded from (seed, index) so results do not depend on thread scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint64_t index)
        : engine_(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x1234567ULL))) {}

    /// Uniform in [0, 1) built from the top 53 bits, identical across platforms.
    double uniform01() {
        const std::uint64_t bits = engine_() >> 11;
        return static_cast<double>(bits) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (fixed algorithm, not std::normal_distribution,
    /// whose output is implementation-defined).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return uniform01() < p; }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace pilotmz
