#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "dgflow/linalg.hpp"
#include "dgflow/tv1d.hpp"

namespace dgflow {

enum class PenaltyKind { quadratic, elastic_net, tv_quadratic };

inline const char* to_string(PenaltyKind k) {
    switch (k) {
        case PenaltyKind::quadratic: return "quadratic";
        case PenaltyKind::elastic_net: return "elastic_net";
        case PenaltyKind::tv_quadratic: return "tv_quadratic";
    }
    return "?";
}

/// A 2-convex penalty functional together with its conjugate machinery.
///
/// Every variant is 1/2||x||^2 plus a convex term, so it is p-convex with
/// p = 2 and c0 = 1/2 in the (weighted) norm of its space, and the
/// conjugate gradient is a proximal map:
///
///   quadratic      Theta(x) = 1/2||x||^2
///   elastic_net    Theta(x) = 1/2||x||^2 + beta * sum_i |x_i|
///   tv_quadratic   Theta(x) = 1/2||x||^2 + beta * TV(x)
///
/// The space weight scales the whole functional so that values, conjugate
/// values and Bregman distances live in the weighted geometry, while
/// conjugate gradients and subgradient selections are weight-invariant.
class Penalty {
public:
    static Penalty quadratic(double space_weight = 1.0) {
        return Penalty(PenaltyKind::quadratic, 0.0, 0, space_weight);
    }
    static Penalty elastic_net(double beta, double space_weight = 1.0) {
        return Penalty(PenaltyKind::elastic_net, beta, 0, space_weight);
    }
    static Penalty tv_quadratic(double beta, Index grid_n, double space_weight = 1.0) {
        if (grid_n < 2) throw std::invalid_argument("Penalty: tv_quadratic needs grid_n >= 2");
        return Penalty(PenaltyKind::tv_quadratic, beta, grid_n, space_weight);
    }

    PenaltyKind kind() const { return kind_; }
    double beta() const { return beta_; }
    Index grid_n() const { return grid_n_; }
    double space_weight() const { return weight_; }

    double convexity_exponent() const { return 2.0; }  // p
    double convexity_constant() const { return 0.5; }  // c0
    double conjugate_exponent() const { return 2.0; }  // p/(p-1)

    /// Theta(x)
    double value(const Vector& x) const {
        check_dim(x, "Penalty::value");
        double v = 0.5 * x.squaredNorm();
        switch (kind_) {
            case PenaltyKind::quadratic: break;
            case PenaltyKind::elastic_net: v += beta_ * x.cwiseAbs().sum(); break;
            case PenaltyKind::tv_quadratic: v += beta_ * tv_value(x); break;
        }
        return weight_ * v;
    }

    /// grad Theta*(xi), the unique minimizer of Theta(z) - <xi, z>.
    Vector conjugate_gradient(const Vector& xi) const {
        check_dim(xi, "Penalty::conjugate_gradient");
        switch (kind_) {
            case PenaltyKind::quadratic: return xi;
            case PenaltyKind::elastic_net: {
                Vector x(xi.size());
                for (Index i = 0; i < xi.size(); ++i) {
                    const double a = std::abs(xi[i]) - beta_;
                    x[i] = (a > 0.0) ? (xi[i] > 0.0 ? a : -a) : 0.0;
                }
                return x;
            }
            case PenaltyKind::tv_quadratic: return tv_prox(xi, beta_);
        }
        throw std::logic_error("unreachable");
    }

    /// Theta*(xi), evaluated through the Fenchel identity at x = grad Theta*(xi).
    double conjugate_value(const Vector& xi) const {
        const Vector x = conjugate_gradient(xi);
        return inner(xi, x, weight_) - value(x);
    }

    /// Canonical element of the subdifferential at x: the smooth part plus the
    /// minimal-norm selection at kinks (0 at x_i = 0 for the l1 part, the
    /// minimal-norm element of the TV subdifferential for the TV part).
    Vector select_subgradient(const Vector& x) const {
        check_dim(x, "Penalty::select_subgradient");
        switch (kind_) {
            case PenaltyKind::quadratic: return x;
            case PenaltyKind::elastic_net: {
                Vector xi = x;
                for (Index i = 0; i < x.size(); ++i) {
                    if (x[i] > 0.0) xi[i] += beta_;
                    else if (x[i] < 0.0) xi[i] -= beta_;
                }
                return xi;
            }
            case PenaltyKind::tv_quadratic: return x + beta_ * tv_min_norm_subgradient(x);
        }
        throw std::logic_error("unreachable");
    }

    /// Bregman distance D_xi Theta(x_bar, x) = Theta(x_bar) - Theta(x) - <xi, x_bar - x>,
    /// valid for xi in the subdifferential of Theta at x.
    double bregman(const Vector& x_bar, const Vector& x, const Vector& xi) const {
        require_same_size(x_bar, x, "Penalty::bregman");
        require_same_size(x, xi, "Penalty::bregman");
        return value(x_bar) - value(x) - inner(xi, x_bar - x, weight_);
    }

private:
    Penalty(PenaltyKind kind, double beta, Index grid_n, double weight)
        : kind_(kind), beta_(beta), grid_n_(grid_n), weight_(weight) {
        if (beta_ < 0.0) throw std::invalid_argument("Penalty: beta must be nonnegative");
        if (weight_ <= 0.0) throw std::invalid_argument("Penalty: space weight must be positive");
    }

    void check_dim(const Vector& x, const char* where) const {
        if (kind_ == PenaltyKind::tv_quadratic) require_size(x, grid_n_, where);
    }

    PenaltyKind kind_;
    double beta_;
    Index grid_n_;
    double weight_;
};

/// A pair (x_bar, x) with a subgradient xi of Theta at x.
struct BregmanTriple {
    Vector x_bar;
    Vector x;
    Vector xi;
};

inline double bregman_distance(const Penalty& pen, const BregmanTriple& t) {
    return pen.bregman(t.x_bar, t.x, t.xi);
}

}  // namespace dgflow
