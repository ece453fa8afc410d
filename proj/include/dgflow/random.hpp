#pragma once

#include <cstdint>
#include <random>

#include "dgflow/linalg.hpp"

namespace dgflow {

// Deterministic RNG used everywhere randomness is needed. Gaussian draws are
// generated by explicit Box-Muller on top of mt19937_64 so that identical
// seeds give identical streams regardless of the standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1), 53 bits
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Vector gaussian_vector(Index n) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

    // uniform draw from the closed ball of given radius around center,
    // in the weighted norm of the space
    Vector ball_point(const Vector& center, double radius, double weight = 1.0) {
        Vector u = gaussian_vector(center.size());
        const double nu = norm(u, weight);
        if (nu == 0.0) return center;
        const double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(center.size()));
        return center + (r / nu) * u;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dgflow
