#pragma once

// Seeded RNG used everywhere randomness appears, so runs are reproducible.
// mt19937_64 has a standardized bit-exact stream; the uniform and normal
// transforms below avoid std::*_distribution, whose output is
// implementation-defined and would break run-to-run hash checks across
// standard libraries.

#include <cmath>
#include <cstdint>
#include <random>

#include "lav/tensor.hpp"

namespace lav {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform on [0,1) with 53 mantissa bits.
    double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

    // Standard normal via the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    std::uint64_t next_u64() { return eng_(); }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline VideoTensor standard_normal(Shape s, std::uint64_t seed) {
    VideoTensor t(s);
    Rng rng(seed);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.normal();
    return t;
}

}  // namespace lav
