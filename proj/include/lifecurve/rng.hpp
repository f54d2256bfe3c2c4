#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lifecurve {

/// Seeded random stream with fixed algorithms for uniform and normal draws,
/// so identical seeds give identical output independent of the standard
/// library's distribution implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0;
        do { u1 = uniform(); } while (u1 <= 0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::uint64_t next_u64() { return engine_(); }

    /// Independent child stream, for per-entity parallel sampling.
    RandomStream fork(std::uint64_t salt) {
        return RandomStream(engine_() ^ (salt * 0x9E3779B97F4A7C15ull));
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0;
};

}  // namespace lifecurve
