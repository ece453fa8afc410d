#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dgflow/flow.hpp"

namespace dgflow {

/// Discrepancy principle: stop as soon as ||F(x(T)) - y_delta|| <= tau * delta.
/// The comparison is inclusive so that the rule terminates in floating point.
/// tau must exceed (1+eta)/(1-eta) for the monotonicity theory to apply; the
/// constructor only enforces tau > 1 and leaves the eta check to callers who
/// know an estimate.
struct DiscrepancyRule {
    double tau = 2.5;
    double delta = 0.0;

    DiscrepancyRule(double tau_, double delta_) : tau(tau_), delta(delta_) {
        if (!(tau > 1.0)) throw std::invalid_argument("DiscrepancyRule: tau must exceed 1");
        if (delta < 0.0) throw std::invalid_argument("DiscrepancyRule: delta must be nonnegative");
    }

    double threshold() const { return tau * delta; }
};

inline bool should_stop(const DiscrepancyRule& rule, double residual) {
    if (residual < 0.0) throw std::invalid_argument("should_stop: negative residual");
    return residual <= rule.threshold();
}

/// phi(T) = D_{xi(T)} Theta(x_hat, x(T)), the Bregman distance from a known
/// solution to the current iterate in the direction of the running dual.
inline double phi(const Penalty& pen, const Vector& x_hat, const DualState& state) {
    return pen.bregman(x_hat, state.x, state.xi);
}

/// Trapezoidal estimate of the residual-square integral over the recorded horizon.
inline double residual_square_integral(const std::vector<double>& times, const std::vector<double>& residuals) {
    if (times.size() != residuals.size()) throw std::invalid_argument("residual_square_integral: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double r0 = residuals[i], r1 = residuals[i + 1];
        acc += 0.5 * (r0 * r0 + r1 * r1) * (times[i + 1] - times[i]);
    }
    return acc;
}

inline double residual_square_integral(const Trajectory& traj) {
    return residual_square_integral(traj.times, traj.residuals);
}

/// Sample indices where the recorded residual crosses the discrepancy
/// threshold downwards. The first entry is the stopping index; later entries
/// are re-crossings of a non-monotone discrete residual.
inline std::vector<std::size_t> find_crossings(const std::vector<double>& residuals, const DiscrepancyRule& rule) {
    std::vector<std::size_t> idx;
    const double thr = rule.threshold();
    for (std::size_t i = 1; i < residuals.size(); ++i)
        if (residuals[i - 1] > thr && residuals[i] <= thr) idx.push_back(i);
    return idx;
}

struct RefineOptions {
    double rel_tol = 1e-3;
    int max_bisections = 40;
};

struct RefinedCrossing {
    DualState state;
    StopReport report;
};

/// Localizes the discrepancy crossing inside the last accepted step by
/// bisecting the step fraction alpha in (0, 1]: partial steps of size
/// alpha * dt_last are re-taken from state_before until the residual lands
/// within rel_tol of tau * delta (from below) or max_bisections is spent.
/// Requires residual(state_before) > tau delta >= residual(full step), which
/// brackets a crossing of the continuous-in-alpha single-step map.
inline RefinedCrossing refine_crossing(const Problem& p, const ButcherTableau& tab, const DualState& state_before,
                                       double dt_last, const DiscrepancyRule& rule, const StepPolicy& policy,
                                       const RefineOptions& opt = {}) {
    const double thr = rule.threshold();
    const double before = residual_norm(p, state_before.x);
    if (!(before > thr))
        throw std::invalid_argument("refine_crossing: state_before must violate the discrepancy rule");

    auto take = [&](double alpha) {
        return rk_step(p, tab, state_before, alpha * dt_last, policy.stage_tol, policy.stage_max_iter);
    };

    RefinedCrossing out;
    StepOutcome full = take(1.0);
    double r_full = residual_norm(p, full.next.x);
    if (!(r_full <= thr))
        throw std::invalid_argument("refine_crossing: full step must satisfy the discrepancy rule");

    double lo = 0.0, hi = 1.0;
    DualState hi_state = full.next;
    double hi_res = r_full;
    const double tol = opt.rel_tol * thr;
    int used = 0;
    while (std::abs(hi_res - thr) > tol && used < opt.max_bisections) {
        const double mid = 0.5 * (lo + hi);
        StepOutcome trial = take(mid);
        const double r = residual_norm(p, trial.next.x);
        if (r <= thr) {
            hi = mid;
            hi_state = trial.next;
            hi_res = r;
        } else {
            lo = mid;
        }
        ++used;
    }
    out.state = hi_state;
    out.report.t_star = state_before.t + hi * dt_last;
    out.report.residual_at_stop = hi_res;
    out.report.refined = true;
    return out;
}

}  // namespace dgflow
