#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dgflow/linalg.hpp"

namespace dgflow {

/// Discrete total variation sum_{i<n-1} |x[i+1] - x[i]|.
inline double tv_value(const Vector& x) {
    double tv = 0.0;
    for (Index i = 0; i + 1 < x.size(); ++i) tv += std::abs(x[i + 1] - x[i]);
    return tv;
}

/// Exact minimizer of  1/2 ||z - y||^2 + lam * TV(z)  by the direct
/// taut-string scan (Condat's formulation): a single forward pass that
/// tracks the lower and upper string and backtracks at forced jumps.
/// Non-iterative, so the result is exact up to rounding.
inline Vector tv_prox(const Vector& y, double lam) {
    if (lam < 0.0) throw std::invalid_argument("tv_prox: negative weight");
    const Index n = y.size();
    Vector x(n);
    if (n == 0) return x;
    if (n == 1 || lam == 0.0) {
        x = y;
        return x;
    }
    const Index last = n - 1;
    Index k = 0, k0 = 0, kminus = 0, kplus = 0;
    double vmin = y[0] - lam, vmax = y[0] + lam;
    double umin = lam, umax = -lam;
    for (;;) {
        while (k == last) {
            if (umin < 0.0) {  // lower string pulls down: jump after kminus
                for (Index i = k0; i <= kminus; ++i) x[i] = vmin;
                k = k0 = kminus = kminus + 1;
                vmin = y[k];
                umin = lam;
                umax = y[k] + lam - vmax;
            } else if (umax > 0.0) {  // upper string pulls up: jump after kplus
                for (Index i = k0; i <= kplus; ++i) x[i] = vmax;
                k = k0 = kplus = kplus + 1;
                vmax = y[k];
                umax = -lam;
                umin = y[k] - lam - vmin;
            } else {  // strings meet: constant tail
                const double v = vmin + umin / static_cast<double>(k - k0 + 1);
                for (Index i = k0; i <= last; ++i) x[i] = v;
                return x;
            }
        }
        umin += y[k + 1] - vmin;
        umax += y[k + 1] - vmax;
        if (umin < -lam) {  // negative jump necessary
            for (Index i = k0; i <= kminus; ++i) x[i] = vmin;
            k = k0 = kminus = kplus = kminus + 1;
            vmin = y[k];
            vmax = y[k] + 2.0 * lam;
            umin = lam;
            umax = -lam;
        } else if (umax > lam) {  // positive jump necessary
            for (Index i = k0; i <= kplus; ++i) x[i] = vmax;
            k = k0 = kminus = kplus = kplus + 1;
            vmax = y[k];
            vmin = y[k] - 2.0 * lam;
            umin = lam;
            umax = -lam;
        } else {  // no jump: extend the segment
            ++k;
            if (umin >= lam) {
                vmin += (umin - lam) / static_cast<double>(k - k0 + 1);
                umin = lam;
                kminus = k;
            }
            if (umax <= -lam) {
                vmax += (umax + lam) / static_cast<double>(k - k0 + 1);
                umax = -lam;
                kplus = k;
            }
        }
    }
}

/// Dual feasibility defect of a claimed prox solution x for data y, weight
/// lam > 0. The running sums S_j = sum_{i<=j}(x_i - y_i) must satisfy
/// |S_j| <= lam, S_j = lam * sign(x[j+1]-x[j]) at jumps, and S_{n-1} = 0.
/// Returns the largest violation, in units of lam; exact solutions give ~0.
inline double tv_prox_certificate(const Vector& y, double lam, const Vector& x) {
    require_same_size(y, x, "tv_prox_certificate");
    const Index n = y.size();
    if (n == 0) return 0.0;
    if (lam == 0.0) return (x - y).cwiseAbs().maxCoeff() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    double worst = 0.0;
    double s = 0.0;
    for (Index j = 0; j < n; ++j) {
        s += x[j] - y[j];
        const double z = s / lam;
        if (j == n - 1) {
            worst = std::max(worst, std::abs(z));  // total mass must vanish
        } else {
            worst = std::max(worst, std::abs(z) - 1.0);
            const double jump = x[j + 1] - x[j];
            if (jump > 0.0) worst = std::max(worst, std::abs(z - 1.0));
            if (jump < 0.0) worst = std::max(worst, std::abs(z + 1.0));
        }
    }
    return std::max(worst, 0.0);
}

/// Minimal-norm element of the subdifferential of TV at x. The dual chain
/// z (one entry per difference) is pinned to sign(x[i+1]-x[i]) at jumps and
/// harmonic (hence linear) across flat runs, with virtual zeros outside;
/// that choice minimizes ||D^T z|| and the box |z|<=1 stays inactive.
inline Vector tv_min_norm_subgradient(const Vector& x) {
    const Index n = x.size();
    Vector g = Vector::Zero(n);
    if (n < 2) return g;
    const Index m = n - 1;
    Vector z(m);
    std::vector<bool> pinned(static_cast<std::size_t>(m), false);
    for (Index i = 0; i < m; ++i) {
        const double d = x[i + 1] - x[i];
        if (d != 0.0) {
            z[i] = (d > 0.0) ? 1.0 : -1.0;
            pinned[static_cast<std::size_t>(i)] = true;
        }
    }
    Index i = 0;
    while (i < m) {
        if (pinned[static_cast<std::size_t>(i)]) {
            ++i;
            continue;
        }
        Index j = i;
        while (j + 1 < m && !pinned[static_cast<std::size_t>(j + 1)]) ++j;
        const double left = (i == 0) ? 0.0 : z[i - 1];
        const double right = (j == m - 1) ? 0.0 : z[j + 1];
        const double run = static_cast<double>(j - i + 2);
        for (Index t = i; t <= j; ++t)
            z[t] = left + (right - left) * static_cast<double>(t - i + 1) / run;
        i = j + 1;
    }
    for (Index j2 = 0; j2 < n; ++j2) {
        const double zl = (j2 == 0) ? 0.0 : z[j2 - 1];
        const double zr = (j2 == m) ? 0.0 : z[j2];
        g[j2] = zl - zr;
    }
    return g;
}

}  // namespace dgflow
