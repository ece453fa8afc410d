#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace dgflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// All spaces are finite-dimensional Hilbert spaces whose inner product is the
// Euclidean dot product scaled by a grid weight: 1 for coordinate vectors,
// the mesh width for functions sampled on a uniform grid.
inline double inner(const Vector& u, const Vector& v, double weight = 1.0) {
    return weight * u.dot(v);
}

inline double norm(const Vector& u, double weight = 1.0) {
    return std::sqrt(weight) * u.norm();
}

inline void require_same_size(const Vector& a, const Vector& b, const char* where) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

inline void require_size(const Vector& a, Index n, const char* where) {
    if (a.size() != n)
        throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs expected " + std::to_string(n) + ")");
}

// Least-squares slope of log(y) against log(x). Pairs with non-positive
// entries are skipped; returns NaN if fewer than two usable pairs remain.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace dgflow
