#pragma once

#include <cstdint>
#include <stdexcept>

#include "dgflow/linalg.hpp"
#include "dgflow/random.hpp"

namespace dgflow {

/// Exact data, a noisy version of it, and the noise level delta with
/// ||y - y_delta|| = delta exactly (in the weighted range norm).
struct NoisyData {
    Vector y;
    Vector y_delta;
    double delta = 0.0;
};

/// y_delta = y + delta * u / ||u|| for a seeded standard-normal u, so the
/// noise norm equals delta exactly and identical seeds reproduce identical
/// vectors bit for bit.
inline NoisyData make_noisy(const Vector& y, double delta, std::uint64_t seed, double range_weight = 1.0) {
    if (delta < 0.0) throw std::invalid_argument("make_noisy: delta must be nonnegative");
    NoisyData out;
    out.y = y;
    out.delta = delta;
    if (delta == 0.0) {
        out.y_delta = y;
        return out;
    }
    if (y.size() == 0) throw std::invalid_argument("make_noisy: positive delta with empty data");
    Rng rng(seed);
    Vector u = rng.gaussian_vector(y.size());
    double nu = norm(u, range_weight);
    while (nu == 0.0) {  // not reachable in practice; regenerate to stay total
        u = rng.gaussian_vector(y.size());
        nu = norm(u, range_weight);
    }
    out.y_delta = y + (delta / nu) * u;
    // renormalize against the realized (representable) difference; one pass
    // reaches the best norm the floating-point lattice around y admits
    const Vector d = out.y_delta - y;
    const double nd = norm(d, range_weight);
    if (nd > 0.0 && nd != delta) out.y_delta = y + (delta / nd) * d;
    return out;
}

}  // namespace dgflow
