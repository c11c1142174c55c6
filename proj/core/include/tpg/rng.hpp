#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tpg {

/**
 * Deterministic standard normal stream: mt19937_64 with a fixed Box-Muller
 * transform (not std::normal_distribution, whose output is implementation
 * defined). Identical seeds give identical streams on every platform.
 */
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : gen_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // uniforms in (0, 1]; the offset keeps log() finite
        const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace tpg
