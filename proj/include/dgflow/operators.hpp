#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <variant>

#include <Eigen/SVD>

#include "dgflow/linalg.hpp"
#include "dgflow/random.hpp"

namespace dgflow {

enum class OperatorKind { dense_linear, diagonal_cubic, auto_convolution };

inline const char* to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::dense_linear: return "dense_linear";
        case OperatorKind::diagonal_cubic: return "diagonal_cubic";
        case OperatorKind::auto_convolution: return "auto_convolution";
    }
    return "?";
}

/// Declared analytic metadata of a forward operator on its working ball
/// B_{2 rho}(x0): a bound C0 on the derivative norms, the tangential-cone
/// constant eta, an optional Lipschitz constant of x -> L(x), the ball
/// radius and its center.
struct OperatorMetadata {
    double c0_bound = 0.0;
    double eta = 0.0;
    std::optional<double> lipschitz;
    double rho = 1.0;
    Vector x0;
};

struct OperatorOptions {
    std::optional<double> c0_bound;
    std::optional<double> eta;
    std::optional<double> lipschitz;
    std::optional<double> rho;
    std::optional<Vector> x0;
};

/// Forward operator F: X -> Y with its derivative family L(x) and adjoint.
/// Three concrete instances:
///
///   dense_linear      F(x) = M x, L(x) = M (eta = 0 exactly)
///   diagonal_cubic    F(x)_i = x_i + gamma x_i^3, L(x) = diag(1 + 3 gamma x_i^2)
///   auto_convolution  F(x)(s) = int_0^s x(s-t) x(t) dt on a uniform grid of
///                     [0,1] with trapezoidal quadrature; L(x) is its exact
///                     (discrete) derivative, L(x)h(s) = 2 int_0^s x(s-t) h(t) dt
///
/// Domain and range carry scalar grid weights; adjoints are taken in the
/// corresponding weighted inner products. Instances are immutable.
class ForwardOperator {
public:
    static ForwardOperator dense_linear(Matrix m, const OperatorOptions& opt = {}) {
        ForwardOperator op;
        op.kind_ = OperatorKind::dense_linear;
        op.domain_dim_ = m.cols();
        op.range_dim_ = m.rows();
        op.matrix_ = std::move(m);
        op.finish_metadata(opt, /*default_eta=*/0.0);
        if (!opt.c0_bound) {
            Eigen::JacobiSVD<Matrix> svd(op.matrix_);
            op.meta_.c0_bound = svd.singularValues()(0);
        }
        if (!opt.lipschitz) op.meta_.lipschitz = 0.0;
        return op;
    }

    static ForwardOperator diagonal_cubic(double gamma, Index n, const OperatorOptions& opt = {}) {
        if (gamma < 0.0) throw std::invalid_argument("diagonal_cubic: gamma must be nonnegative");
        if (n < 1) throw std::invalid_argument("diagonal_cubic: n must be positive");
        ForwardOperator op;
        op.kind_ = OperatorKind::diagonal_cubic;
        op.domain_dim_ = op.range_dim_ = n;
        op.gamma_ = gamma;
        op.finish_metadata(opt, /*default_eta=*/0.0);
        const double reach = op.meta_.x0.cwiseAbs().maxCoeff() + 2.0 * op.meta_.rho;
        if (!opt.c0_bound) op.meta_.c0_bound = 1.0 + 3.0 * gamma * reach * reach;
        if (!opt.lipschitz) op.meta_.lipschitz = 6.0 * gamma * reach;
        return op;
    }

    static ForwardOperator auto_convolution(Index n, const OperatorOptions& opt = {}) {
        if (n < 2) throw std::invalid_argument("auto_convolution: need at least 2 grid points");
        ForwardOperator op;
        op.kind_ = OperatorKind::auto_convolution;
        op.domain_dim_ = op.range_dim_ = n;
        op.weight_x_ = op.weight_y_ = 1.0 / static_cast<double>(n - 1);
        op.finish_metadata(opt, /*default_eta=*/0.5);
        // Young's inequality on [0,1]: ||L(x)h|| <= 2 ||x||_{L1} ||h|| <= 2 ||x|| ||h||
        if (!opt.c0_bound)
            op.meta_.c0_bound = 2.0 * (norm(op.meta_.x0, op.weight_x_) + 2.0 * op.meta_.rho);
        if (!opt.lipschitz) op.meta_.lipschitz = 2.0;
        return op;
    }

    OperatorKind kind() const { return kind_; }
    Index domain_dim() const { return domain_dim_; }
    Index range_dim() const { return range_dim_; }
    double domain_weight() const { return weight_x_; }
    double range_weight() const { return weight_y_; }
    double gamma() const { return gamma_; }
    const Matrix& matrix() const { return matrix_; }
    const OperatorMetadata& metadata() const { return meta_; }

    bool in_working_ball(const Vector& x) const {
        return norm(x - meta_.x0, weight_x_) <= 2.0 * meta_.rho * (1.0 + 1e-12);
    }

    /// F(x)
    Vector apply(const Vector& x) const {
        require_size(x, domain_dim_, "ForwardOperator::apply");
        switch (kind_) {
            case OperatorKind::dense_linear: return matrix_ * x;
            case OperatorKind::diagonal_cubic: {
                Vector y(x.size());
                for (Index i = 0; i < x.size(); ++i) y[i] = x[i] + gamma_ * x[i] * x[i] * x[i];
                return y;
            }
            case OperatorKind::auto_convolution: {
                const Index n = domain_dim_;
                const double h = weight_x_;
                Vector y = Vector::Zero(n);
                for (Index i = 1; i < n; ++i) {
                    double acc = 0.5 * (x[i] * x[0] + x[0] * x[i]);
                    for (Index j = 1; j < i; ++j) acc += x[i - j] * x[j];
                    y[i] = h * acc;
                }
                return y;
            }
        }
        throw std::logic_error("unreachable");
    }

    /// L(x) h
    Vector deriv_apply(const Vector& x, const Vector& hv) const {
        require_size(x, domain_dim_, "ForwardOperator::deriv_apply");
        require_size(hv, domain_dim_, "ForwardOperator::deriv_apply");
        switch (kind_) {
            case OperatorKind::dense_linear: return matrix_ * hv;
            case OperatorKind::diagonal_cubic: {
                Vector y(x.size());
                for (Index i = 0; i < x.size(); ++i) y[i] = (1.0 + 3.0 * gamma_ * x[i] * x[i]) * hv[i];
                return y;
            }
            case OperatorKind::auto_convolution: {
                const Index n = domain_dim_;
                const double h = weight_x_;
                Vector y = Vector::Zero(n);
                for (Index i = 1; i < n; ++i) {
                    double acc = 0.5 * (x[i] * hv[0] + x[0] * hv[i]);
                    for (Index j = 1; j < i; ++j) acc += x[i - j] * hv[j];
                    y[i] = 2.0 * h * acc;
                }
                return y;
            }
        }
        throw std::logic_error("unreachable");
    }

    /// L(x)* g in the weighted inner products of domain and range.
    Vector deriv_adjoint_apply(const Vector& x, const Vector& g) const {
        require_size(x, domain_dim_, "ForwardOperator::deriv_adjoint_apply");
        require_size(g, range_dim_, "ForwardOperator::deriv_adjoint_apply");
        switch (kind_) {
            case OperatorKind::dense_linear: return matrix_.transpose() * g;
            case OperatorKind::diagonal_cubic: return deriv_apply(x, g);  // self-adjoint
            case OperatorKind::auto_convolution: {
                // transpose of the lower-triangular convolution stencil;
                // equal grid weights on both sides cancel in the adjoint
                const Index n = domain_dim_;
                const double h = weight_x_;
                Vector y = Vector::Zero(n);
                for (Index i = 1; i < n; ++i) {
                    const double gi = g[i];
                    y[0] += 0.5 * x[i] * gi;
                    y[i] += 0.5 * x[0] * gi;
                    for (Index j = 1; j < i; ++j) y[j] += x[i - j] * gi;
                }
                return 2.0 * h * y;
            }
        }
        throw std::logic_error("unreachable");
    }

    /// Dense matrix of L(x) (column basis images); test and diagnostic use.
    Matrix deriv_matrix(const Vector& x) const {
        Matrix m(range_dim_, domain_dim_);
        Vector e = Vector::Zero(domain_dim_);
        for (Index j = 0; j < domain_dim_; ++j) {
            e[j] = 1.0;
            m.col(j) = deriv_apply(x, e);
            e[j] = 0.0;
        }
        return m;
    }

    /// ||L(x)||_{X->Y} estimated by power iteration on L(x)* L(x).
    double estimate_deriv_norm(const Vector& x, int iters = 80, std::uint64_t seed = 7) const {
        Rng rng(seed);
        Vector v = rng.gaussian_vector(domain_dim_);
        double nv = norm(v, weight_x_);
        if (nv == 0.0) return 0.0;
        v /= nv;
        for (int it = 0; it < iters; ++it) {
            Vector w = deriv_adjoint_apply(x, deriv_apply(x, v));
            const double nw = norm(w, weight_x_);
            if (nw == 0.0) return 0.0;
            v = w / nw;
        }
        return norm(deriv_apply(x, v), weight_y_) / norm(v, weight_x_);
    }

    /// Empirical lower bound for the tangential-cone constant: the maximum of
    ///   ||F(x) - F(xb) - L(xb)(x - xb)|| / ||F(x) - F(xb)||
    /// over sampled pairs in the working ball B_{2 rho}(x0). Degenerate pairs
    /// with F(x) = F(xb) are skipped.
    double estimate_eta(int samples, std::uint64_t seed) const {
        if (samples < 1) throw std::invalid_argument("estimate_eta: samples must be >= 1");
        Rng rng(seed);
        double worst = 0.0;
        for (int s = 0; s < samples; ++s) {
            const Vector x = rng.ball_point(meta_.x0, 2.0 * meta_.rho, weight_x_);
            const Vector xb = rng.ball_point(meta_.x0, 2.0 * meta_.rho, weight_x_);
            const Vector df = apply(x) - apply(xb);
            const double den = norm(df, weight_y_);
            if (den <= 1e-300) continue;
            const double num = norm(df - deriv_apply(xb, x - xb), weight_y_);
            if (num <= 1e-13 * den) continue;  // rounding floor: exact linearity stays 0
            worst = std::max(worst, num / den);
        }
        return worst;
    }

private:
    ForwardOperator() = default;

    void finish_metadata(const OperatorOptions& opt, double default_eta) {
        meta_.rho = opt.rho.value_or(1.0);
        if (meta_.rho <= 0.0) throw std::invalid_argument("operator: rho must be positive");
        meta_.x0 = opt.x0.value_or(Vector::Zero(domain_dim_));
        require_size(meta_.x0, domain_dim_, "operator x0");
        meta_.eta = opt.eta.value_or(default_eta);
        if (meta_.eta < 0.0 || meta_.eta >= 1.0)
            throw std::invalid_argument("operator: eta must lie in [0, 1)");
        if (opt.c0_bound) meta_.c0_bound = *opt.c0_bound;
        if (opt.lipschitz) meta_.lipschitz = *opt.lipschitz;
    }

    OperatorKind kind_ = OperatorKind::dense_linear;
    Index domain_dim_ = 0, range_dim_ = 0;
    double weight_x_ = 1.0, weight_y_ = 1.0;
    Matrix matrix_;
    double gamma_ = 0.0;
    OperatorMetadata meta_;
};

}  // namespace dgflow
