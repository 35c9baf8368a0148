#pragma once

#include "lossmpt/twobus.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace testing {

// Fixed seeds keep every property run reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

    // Impedance with |Z| in [zmin, zmax] and R/X spread over several decades.
    lossmpt::Impedance impedance(double zmin = 0.05, double zmax = 2.0)
    {
        const double mag = uniform(zmin, zmax);
        const double angle = uniform(0.02, 1.55);
        return {mag * std::cos(angle), mag * std::sin(angle)};
    }

    // Rotated injection whose discriminant is at least `margin`.
    lossmpt::RotatedPower feasible_rotated(double v0, double margin = 0.0)
    {
        for (;;) {
            const lossmpt::RotatedPower s{uniform(-0.25 * v0 * v0, 2.0), uniform(-2.0, 2.0)};
            if (lossmpt::discriminant(s, v0) >= margin) {
                return s;
            }
        }
    }

private:
    std::mt19937_64 engine_;
};

inline lossmpt::Impedance impedance_from(double lambda, double z_mag)
{
    const double h = std::sqrt(1.0 + lambda * lambda);
    return {z_mag * lambda / h, z_mag / h};
}

}  // namespace testing
