#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dgflow/linalg.hpp"

namespace dgflow {

/// Runge-Kutta coefficients (A, b, c) with s stages. Explicit iff A is
/// strictly lower triangular. The flow being integrated is autonomous, so c
/// never enters a step; the row-sum convention c_i = sum_j a_ij is still
/// checked at validation to keep tableaux well-formed.
struct ButcherTableau {
    Matrix a;
    Vector b;
    Vector c;

    Index stages() const { return b.size(); }

    bool is_explicit() const {
        for (Index i = 0; i < a.rows(); ++i)
            for (Index j = i; j < a.cols(); ++j)
                if (a(i, j) != 0.0) return false;
        return true;
    }

    static ButcherTableau explicit_euler() {
        ButcherTableau t;
        t.a = Matrix::Zero(1, 1);
        t.b = Vector::Constant(1, 1.0);
        t.c = Vector::Zero(1);
        return t;
    }

    static ButcherTableau implicit_euler() {
        ButcherTableau t;
        t.a = Matrix::Constant(1, 1, 1.0);
        t.b = Vector::Constant(1, 1.0);
        t.c = Vector::Constant(1, 1.0);
        return t;
    }

    /// Explicit 2-stage method with b = (1/2, 1/2), a21 = 1.
    static ButcherTableau heun() {
        ButcherTableau t;
        t.a = Matrix::Zero(2, 2);
        t.a(1, 0) = 1.0;
        t.b = Vector::Constant(2, 0.5);
        t.c = Vector::Zero(2);
        t.c[1] = 1.0;
        return t;
    }

    /// Text format: first line s; next s lines the rows of A; then b; then c.
    /// Whitespace-separated decimals.
    static ButcherTableau from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open tableau file: " + path);
        long s = 0;
        if (!(in >> s) || s < 1) throw std::runtime_error(path + ": bad stage count");
        ButcherTableau t;
        t.a = Matrix(s, s);
        t.b = Vector(s);
        t.c = Vector(s);
        for (Index i = 0; i < s; ++i)
            for (Index j = 0; j < s; ++j)
                if (!(in >> t.a(i, j))) throw std::runtime_error(path + ": truncated A matrix");
        for (Index i = 0; i < s; ++i)
            if (!(in >> t.b[i])) throw std::runtime_error(path + ": truncated b vector");
        for (Index i = 0; i < s; ++i)
            if (!(in >> t.c[i])) throw std::runtime_error(path + ": truncated c vector");
        return t;
    }
};

struct TableauReport {
    Index stages = 0;
    bool consistent = false;      // sum_i b_i = 1
    bool explicit_method = false;
    bool row_sums_match = false;  // c_i = sum_j a_ij
    bool order2 = false;          // sum_i b_i (sum_j a_ij) = 1/2
    int order = 0;                // 0 = unknown (inconsistent), else 1 or 2

    std::string describe() const {
        std::ostringstream os;
        os << (consistent ? "consistent" : "inconsistent") << ", "
           << (explicit_method ? "explicit" : "implicit") << ", order "
           << (order == 0 ? std::string("unknown") : std::to_string(order));
        if (!row_sums_match) os << ", row-sum convention violated";
        return os.str();
    }
};

/// Checks consistency, explicitness, the row-sum convention, and classifies
/// the order (1 for consistent methods, 2 when additionally b.c = 1/2 with
/// the row-sum nodes; classification stops at 2).
inline TableauReport validate_tableau(const ButcherTableau& t, double tol = 1e-12) {
    const Index s = t.b.size();
    if (s < 1) throw std::invalid_argument("validate_tableau: empty tableau");
    if (t.a.rows() != s || t.a.cols() != s || t.c.size() != s)
        throw std::invalid_argument("validate_tableau: A must be s x s and b, c length s");
    TableauReport r;
    r.stages = s;
    r.consistent = std::abs(t.b.sum() - 1.0) <= tol;
    r.explicit_method = t.is_explicit();
    r.row_sums_match = (t.a.rowwise().sum() - t.c).cwiseAbs().maxCoeff() <= tol;
    // Order-2 condition against the intrinsic nodes sum_j a_ij (the flow is
    // autonomous, so these are the nodes that matter).
    const double bc = t.b.dot(t.a.rowwise().sum());
    r.order2 = r.consistent && std::abs(bc - 0.5) <= tol;
    r.order = r.consistent ? (r.order2 ? 2 : 1) : 0;
    return r;
}

}  // namespace dgflow
