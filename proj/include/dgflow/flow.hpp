#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dgflow/linalg.hpp"
#include "dgflow/operators.hpp"
#include "dgflow/penalty.hpp"
#include "dgflow/tableau.hpp"

namespace dgflow {

/// One instance of the dual flow: operator, penalty and the (noisy) data the
/// residual is measured against.
struct Problem {
    ForwardOperator op;
    Penalty pen;
    Vector y_delta;
};

/// State of the coupled pair at time t: the dual variable xi and the primal
/// iterate x = grad Theta*(xi).
struct DualState {
    double t = 0.0;
    Vector xi;
    Vector x;
};

inline double residual_norm(const Problem& p, const Vector& x) {
    return norm(p.op.apply(x) - p.y_delta, p.op.range_weight());
}

/// Psi(xi) = -L(x)*(F(x) - y_delta) with x = grad Theta*(xi): the right-hand
/// side of the dual flow d xi / dt = Psi(xi).
inline Vector rhs(const ForwardOperator& op, const Penalty& pen, const Vector& y_delta, const Vector& xi) {
    const Vector x = pen.conjugate_gradient(xi);
    return -op.deriv_adjoint_apply(x, op.apply(x) - y_delta);
}

inline Vector rhs(const Problem& p, const Vector& xi) { return rhs(p.op, p.pen, p.y_delta, xi); }

/// Step-size policy. In scaled mode the step is mu / C0^2 with C0 the
/// declared derivative bound, mirroring the classical Landweber step bound;
/// fixed mode takes dt as given.
struct StepPolicy {
    enum class Mode { fixed, scaled };
    Mode mode = Mode::scaled;
    double dt = 0.0;           // fixed mode
    double mu = 0.9;           // scaled mode, in (0, 1]
    long max_steps = 100000;
    double stage_tol = 1e-12;  // implicit stage fixed-point tolerance
    int stage_max_iter = 200;
    bool record_states = true;

    double base_dt(const ForwardOperator& op) const {
        if (mode == Mode::fixed) {
            if (!(dt > 0.0)) throw std::invalid_argument("StepPolicy: fixed mode needs dt > 0");
            return dt;
        }
        if (!(mu > 0.0) || mu > 1.0) throw std::invalid_argument("StepPolicy: mu must lie in (0, 1]");
        const double c0 = op.metadata().c0_bound;
        if (!(c0 > 0.0)) throw std::invalid_argument("StepPolicy: scaled mode needs a positive C0 bound");
        return mu / (c0 * c0);
    }
};

struct StepOutcome {
    DualState next;
    bool stage_converged = true;
    int stage_iterations = 0;
};

/// One Runge-Kutta step of the dual flow. Explicit tableaux evaluate stages
/// in order. Implicit tableaux solve the coupled stage equations
///   k_i = xi_n + dt sum_j a_ij Psi(k_j)
/// by fixed-point iteration, damped when dt ||A|| C0^2 exceeds 1 so that the
/// iteration still contracts on stiff steps; fixed points are unchanged by
/// the damping. Nonconvergence within stage_max_iter is reported to the
/// caller, who may halve dt and retry.
inline StepOutcome rk_step(const Problem& p, const ButcherTableau& tab, const DualState& state, double dt,
                           double stage_tol = 1e-12, int stage_max_iter = 200) {
    if (!(dt > 0.0)) throw std::invalid_argument("rk_step: dt must be positive");
    const Index s = tab.stages();
    const double wx = p.op.domain_weight();
    StepOutcome out;
    std::vector<Vector> f(static_cast<std::size_t>(s));

    if (tab.is_explicit()) {
        for (Index i = 0; i < s; ++i) {
            Vector k = state.xi;
            for (Index j = 0; j < i; ++j)
                if (tab.a(i, j) != 0.0) k += dt * tab.a(i, j) * f[static_cast<std::size_t>(j)];
            f[static_cast<std::size_t>(i)] = rhs(p, k);
        }
        out.stage_iterations = static_cast<int>(s);
    } else {
        std::vector<Vector> k(static_cast<std::size_t>(s), state.xi);
        std::vector<Vector> target(static_cast<std::size_t>(s));
        const double stiffness = dt * tab.a.cwiseAbs().rowwise().sum().maxCoeff() *
                                 p.op.metadata().c0_bound * p.op.metadata().c0_bound;
        const double omega = stiffness > 1.0 ? 1.0 / stiffness : 1.0;
        bool converged = false;
        int it = 0;
        for (; it < stage_max_iter; ++it) {
            for (Index i = 0; i < s; ++i) f[static_cast<std::size_t>(i)] = rhs(p, k[static_cast<std::size_t>(i)]);
            double defect = 0.0;
            for (Index i = 0; i < s; ++i) {
                target[static_cast<std::size_t>(i)] = state.xi;
                for (Index j = 0; j < s; ++j)
                    if (tab.a(i, j) != 0.0)
                        target[static_cast<std::size_t>(i)] += dt * tab.a(i, j) * f[static_cast<std::size_t>(j)];
                defect = std::max(defect, norm(target[static_cast<std::size_t>(i)] - k[static_cast<std::size_t>(i)], wx));
            }
            if (defect <= 0.5 * stage_tol) {  // f already matches k
                converged = true;
                break;
            }
            for (Index i = 0; i < s; ++i)
                k[static_cast<std::size_t>(i)] +=
                    omega * (target[static_cast<std::size_t>(i)] - k[static_cast<std::size_t>(i)]);
        }
        out.stage_iterations = it + 1;
        out.stage_converged = converged;
    }

    Vector xi_next = state.xi;
    for (Index i = 0; i < s; ++i)
        if (tab.b[i] != 0.0) xi_next += dt * tab.b[i] * f[static_cast<std::size_t>(i)];
    out.next.t = state.t + dt;
    out.next.xi = std::move(xi_next);
    out.next.x = p.pen.conjugate_gradient(out.next.xi);
    return out;
}

enum class EventKind {
    ball_exit_warning,
    stage_nonconvergence,
    stopped_by_discrepancy,
    max_steps_reached,
    monotonicity_violation
};

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::ball_exit_warning: return "ball_exit_warning";
        case EventKind::stage_nonconvergence: return "stage_nonconvergence";
        case EventKind::stopped_by_discrepancy: return "stopped_by_discrepancy";
        case EventKind::max_steps_reached: return "max_steps_reached";
        case EventKind::monotonicity_violation: return "monotonicity_violation";
    }
    return "?";
}

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::max_steps_reached;
    std::string detail;
};

enum class StopReason { stopped_by_discrepancy, max_steps_reached, aborted };

/// Where and how a discrepancy stop happened. When refined, the residual at
/// T* lands within the refinement tolerance below tau * delta.
struct StopReport {
    double t_star = 0.0;
    double residual_at_stop = 0.0;
    long steps_taken = 0;
    bool refined = false;
};

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::stopped_by_discrepancy: return "stopped_by_discrepancy";
        case StopReason::max_steps_reached: return "max_steps_reached";
        case StopReason::aborted: return "aborted";
    }
    return "?";
}

/// Recorded history of one integration: per-sample times, residuals, step
/// sizes and penalty diagnostics (phi only when a reference solution was
/// supplied), the full states when requested, and the event log.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> residuals;
    std::vector<double> step_sizes;  // step_sizes[i] leads into sample i; 0 for the initial sample
    std::vector<double> phis;        // Bregman distance to the reference, when supplied
    std::vector<double> theta_values;
    std::vector<DualState> states;
    std::vector<Event> events;
    DualState final_state;
    StopReason reason = StopReason::max_steps_reached;
    std::optional<StopReport> stop_report;
    long steps_taken = 0;

    std::size_t samples() const { return times.size(); }
};

}  // namespace dgflow
