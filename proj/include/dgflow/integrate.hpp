#pragma once

#include <optional>
#include <sstream>

#include "dgflow/stopping.hpp"

namespace dgflow {

struct IntegrateOptions {
    std::optional<DiscrepancyRule> rule;  // absent: run to max_steps
    bool refine = true;
    RefineOptions refine_opt;
    std::optional<Vector> reference;      // known solution, enables phi diagnostics
    std::optional<Vector> x0;             // defaults to the operator's ball center
};

namespace detail {
inline void record_sample(Trajectory& traj, const Problem& p, const StepPolicy& policy,
                          const IntegrateOptions& opts, const DualState& st, double res, double dt_in) {
    traj.times.push_back(st.t);
    traj.residuals.push_back(res);
    traj.step_sizes.push_back(dt_in);
    traj.theta_values.push_back(p.pen.value(st.x));
    if (opts.reference) traj.phis.push_back(phi(p.pen, *opts.reference, st));
    if (policy.record_states) traj.states.push_back(st);
    traj.final_state = st;
}
}  // namespace detail

/// Integrates the dual flow from (xi0, x0) with xi0 = select_subgradient(x0)
/// until the discrepancy rule fires (with optional fractional-step refinement
/// of the crossing), max_steps is exhausted, or an implicit stage repeatedly
/// fails to converge (dt is halved up to 10 times per step, then the run
/// aborts). Ball exits are warned about, never projected away.
inline Trajectory integrate(const Problem& p, const ButcherTableau& tab, const StepPolicy& policy,
                            IntegrateOptions opts = {}) {
    Trajectory traj;
    const Vector x0 = opts.x0.value_or(p.op.metadata().x0);
    if (opts.reference) require_same_size(*opts.reference, x0, "integrate reference");

    DualState state;
    state.t = 0.0;
    state.x = x0;
    state.xi = p.pen.select_subgradient(x0);

    double res = residual_norm(p, state.x);
    detail::record_sample(traj, p, policy, opts, state, res, 0.0);

    const double thr = opts.rule ? opts.rule->threshold() : 0.0;
    if (opts.rule && should_stop(*opts.rule, res)) {
        traj.reason = StopReason::stopped_by_discrepancy;
        traj.events.push_back({0.0, EventKind::stopped_by_discrepancy, "initial state"});
        traj.stop_report = StopReport{0.0, res, 0, false};
        return traj;
    }

    const double base_dt = policy.base_dt(p.op);
    bool ball_warned = false;
    double prev_phi = opts.reference ? traj.phis.back() : 0.0;

    for (long step = 1; step <= policy.max_steps; ++step) {
        double dt = base_dt;
        StepOutcome out;
        bool accepted = false;
        for (int halving = 0; halving <= 10; ++halving) {
            out = rk_step(p, tab, state, dt, policy.stage_tol, policy.stage_max_iter);
            if (out.stage_converged) {
                accepted = true;
                break;
            }
            std::ostringstream os;
            os << "stage fixed point did not converge at dt=" << dt;
            traj.events.push_back({state.t, EventKind::stage_nonconvergence, os.str()});
            dt *= 0.5;
        }
        if (!accepted) {
            traj.events.push_back({state.t, EventKind::stage_nonconvergence, "aborted after 10 halvings"});
            traj.reason = StopReason::aborted;
            traj.steps_taken = step - 1;
            return traj;
        }

        double new_res = residual_norm(p, out.next.x);
        DualState next = out.next;
        bool stopping = opts.rule && should_stop(*opts.rule, new_res);
        bool refined = false;
        double t_star = next.t;

        if (stopping && opts.refine && res > thr) {
            RefinedCrossing rc = refine_crossing(p, tab, state, dt, *opts.rule, policy, opts.refine_opt);
            next = rc.state;
            new_res = rc.report.residual_at_stop;
            t_star = rc.report.t_star;
            refined = true;
        }

        if (!ball_warned && !p.op.in_working_ball(next.x)) {
            std::ostringstream os;
            os << "iterate left B_2rho(x0): distance " << norm(next.x - p.op.metadata().x0, p.op.domain_weight())
               << " > " << 2.0 * p.op.metadata().rho;
            traj.events.push_back({next.t, EventKind::ball_exit_warning, os.str()});
            ball_warned = true;
        }

        detail::record_sample(traj, p, policy, opts, next, new_res, next.t - state.t);
        traj.steps_taken = step;

        if (opts.reference) {
            const double cur_phi = traj.phis.back();
            if (res > thr && cur_phi > prev_phi + 1e-10) {
                std::ostringstream os;
                os << "phi increased by " << cur_phi - prev_phi;
                traj.events.push_back({next.t, EventKind::monotonicity_violation, os.str()});
            }
            prev_phi = cur_phi;
        }

        state = next;
        res = new_res;

        if (stopping) {
            traj.reason = StopReason::stopped_by_discrepancy;
            traj.events.push_back({t_star, EventKind::stopped_by_discrepancy, refined ? "refined" : "full step"});
            traj.stop_report = StopReport{t_star, new_res, step, refined};
            return traj;
        }
    }

    traj.reason = StopReason::max_steps_reached;
    traj.events.push_back({state.t, EventKind::max_steps_reached, ""});
    return traj;
}

}  // namespace dgflow
