#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "dgflow/config.hpp"
#include "dgflow/experiments.hpp"

namespace dgflow {

namespace detail {

inline ForwardOperator build_operator(const OperatorConfig& cfg) {
    OperatorOptions opt;
    opt.c0_bound = cfg.c0_bound;
    opt.eta = cfg.eta;
    opt.rho = cfg.rho;
    if (cfg.kind == "dense_linear") return ForwardOperator::dense_linear(load_matrix_csv(cfg.matrix_path), opt);
    if (cfg.kind == "diagonal_cubic") return ForwardOperator::diagonal_cubic(cfg.gamma.value_or(0.0), *cfg.n, opt);
    return ForwardOperator::auto_convolution(*cfg.n, opt);
}

inline Penalty build_penalty(const PenaltyConfig& cfg, const ForwardOperator& op) {
    const double w = op.domain_weight();
    if (cfg.kind == "quadratic") return Penalty::quadratic(w);
    if (cfg.kind == "elastic_net") return Penalty::elastic_net(*cfg.beta, w);
    const long n = cfg.grid_n.value_or(op.domain_dim());
    if (n != op.domain_dim())
        throw ConfigError("config: penalty.grid_n: must match the operator dimension (" +
                          std::to_string(op.domain_dim()) + ")");
    return Penalty::tv_quadratic(*cfg.beta, n, w);
}

inline ButcherTableau build_tableau(const FlowConfig& cfg) {
    if (cfg.tableau == "explicit_euler") return ButcherTableau::explicit_euler();
    if (cfg.tableau == "implicit_euler") return ButcherTableau::implicit_euler();
    if (cfg.tableau == "heun") return ButcherTableau::heun();
    return ButcherTableau::from_file(cfg.custom_tableau_path);
}

inline StepPolicy build_policy(const FlowConfig& cfg) {
    StepPolicy p;
    p.mode = cfg.step_mode == "fixed" ? StepPolicy::Mode::fixed : StepPolicy::Mode::scaled;
    if (cfg.dt) p.dt = *cfg.dt;
    p.mu = cfg.mu;
    p.max_steps = cfg.max_steps;
    p.stage_tol = cfg.stage_tol;
    p.stage_max_iter = cfg.stage_max_iter;
    p.record_states = false;
    return p;
}

inline Vector build_truth(const ExperimentConfig& cfg, const ForwardOperator& op) {
    const Index n = op.domain_dim();
    if (!cfg.truth_path.empty()) {
        Vector x = load_vector_csv(cfg.truth_path);
        require_size(x, n, "experiment.truth_path");
        return x;
    }
    if (cfg.truth == "ones") return Vector::Ones(n);
    if (cfg.truth == "zero") return Vector::Zero(n);
    if (cfg.truth == "smooth") {
        Vector x(n);
        for (Index i = 0; i < n; ++i) {
            const double s = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
            x[i] = 1.0 + 0.5 * std::sin(M_PI * s);
        }
        return x;
    }
    if (cfg.truth == "piecewise") {
        Vector x = Vector::Zero(n);
        for (Index i = 0; i < n; ++i) {
            const double s = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
            if (s >= 0.2 && s < 0.45) x[i] = 1.0;
            else if (s >= 0.6 && s < 0.8) x[i] = -0.5;
        }
        return x;
    }
    // sparse
    Rng rng(cfg.seed + 1);
    Vector x = Vector::Zero(n);
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    const Index k = std::min<Index>(cfg.sparse_k, n);
    for (Index i = 0; i < k; ++i) {
        const Index j = i + static_cast<Index>(rng.uniform() * static_cast<double>(n - i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        const double mag = rng.uniform(1.0, 2.0);
        x[idx[static_cast<std::size_t>(i)]] = rng.uniform() < 0.5 ? mag : -mag;
    }
    return x;
}

inline nlohmann::json events_json(const std::vector<Event>& events) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : events)
        arr.push_back({{"t", e.t}, {"kind", to_string(e.kind)}, {"detail", e.detail}});
    return arr;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream os;
    os << "t,residual,phi,theta_value,step_size\n";
    for (std::size_t i = 0; i < traj.samples(); ++i) {
        os << fmt_g17(traj.times[i]) << ',' << fmt_g17(traj.residuals[i]) << ','
           << (traj.phis.empty() ? "" : fmt_g17(traj.phis[i])) << ',' << fmt_g17(traj.theta_values[i]) << ','
           << fmt_g17(traj.step_sizes[i]) << '\n';
    }
    return os.str();
}

}  // namespace detail

/// Executes the configured experiment and writes its artifacts under the
/// output directory. Exit status: 0 on a clean discrepancy stop (or a
/// completed study), 2 when max_steps ran out without a stop, 3 on an abort.
inline int run_experiment(const RunConfig& cfg, std::ostream& log) {
    namespace fs = std::filesystem;
    const bool quiet = cfg.log_level == "quiet";
    fs::create_directories(cfg.output);

    // sparse_demo assembles its own seeded instance
    if (cfg.experiment.kind == "sparse_demo") {
        const Index n = cfg.op.n.value_or(20);
        const double delta = cfg.experiment.deltas.front();
        SparseDemoReport rep = sparse_recovery_demo(n, cfg.experiment.sparse_k, delta, cfg.experiment.seed);
        TvDemoReport tv = tv_recovery_demo(n, delta, cfg.experiment.seed);
        std::ostringstream os;
        os << "index,x_dagger,x_elastic,x_quadratic,x_tv_dagger,x_tv\n";
        for (Index i = 0; i < n; ++i)
            os << i << ',' << fmt_g17(rep.x_dagger[i]) << ',' << fmt_g17(rep.x_elastic[i]) << ','
               << fmt_g17(rep.x_quadratic[i]) << ',' << fmt_g17(tv.x_dagger[i]) << ',' << fmt_g17(tv.x_tv[i])
               << '\n';
        detail::write_file(fs::path(cfg.output) / "recovery.csv", os.str());
        nlohmann::json j{{"experiment", "sparse_demo"},
                         {"elastic", {{"precision", rep.elastic.precision}, {"recall", rep.elastic.recall},
                                      {"t_star", rep.t_star_elastic}, {"stopped", rep.elastic_stopped}}},
                         {"quadratic", {{"precision", rep.quadratic.precision}, {"recall", rep.quadratic.recall},
                                        {"t_star", rep.t_star_quadratic}, {"stopped", rep.quadratic_stopped}}},
                         {"tv", {{"tv_truth", tv.tv_truth}, {"tv_estimate", tv.tv_estimate},
                                 {"t_star", tv.t_star}, {"stopped", tv.stopped}}}};
        detail::write_file(fs::path(cfg.output) / "summary.json", j.dump(2) + "\n");
        if (!quiet)
            log << "sparse demo: elastic recall " << rep.elastic.recall << " precision " << rep.elastic.precision
                << "; quadratic recall " << rep.quadratic.recall << " precision " << rep.quadratic.precision
                << "; tv " << tv.tv_estimate << " vs " << tv.tv_truth << "\n";
        return 0;
    }

    ForwardOperator op = detail::build_operator(cfg.op);
    Penalty pen = detail::build_penalty(cfg.penalty, op);
    ButcherTableau tab = detail::build_tableau(cfg.flow);
    StepPolicy policy = detail::build_policy(cfg.flow);
    Vector x_dagger = detail::build_truth(cfg.experiment, op);

    std::optional<double> eta_hat;
    if (op.kind() != OperatorKind::dense_linear) {
        eta_hat = op.estimate_eta(100, cfg.experiment.seed + 977);
        const double eta = std::max(*eta_hat, op.metadata().eta);
        if (eta < 1.0 && cfg.stop.tau <= (1.0 + eta) / (1.0 - eta) && !quiet)
            log << "warning: stop.tau = " << cfg.stop.tau << " does not exceed (1+eta)/(1-eta) = "
                << (1.0 + eta) / (1.0 - eta) << " for estimated eta " << eta << "\n";
    }

    if (cfg.experiment.kind == "order_study") {
        if (op.kind() != OperatorKind::dense_linear || pen.kind() != PenaltyKind::quadratic)
            throw detail::ConfigError("config: experiment.kind: order_study needs dense_linear + quadratic");
        if (cfg.experiment.dts.empty()) throw detail::ConfigError("config: experiment.dts: required for order_study");
        const Vector y = op.apply(x_dagger);
        const NoisyData data = make_noisy(y, cfg.experiment.deltas.front(), cfg.experiment.seed, op.range_weight());
        std::vector<std::pair<std::string, ButcherTableau>> tableaux = {
            {"explicit_euler", ButcherTableau::explicit_euler()},
            {"heun", ButcherTableau::heun()},
            {"implicit_euler", ButcherTableau::implicit_euler()}};
        OrderStudyResult res = order_study(op, data.y_delta, cfg.experiment.horizon, tableaux, cfg.experiment.dts,
                                           cfg.flow.stage_tol, cfg.flow.stage_max_iter);
        detail::write_file(fs::path(cfg.output) / "order.csv", res.csv());
        nlohmann::json j{{"experiment", "order_study"}, {"horizon", cfg.experiment.horizon}};
        for (const auto& [name, slope] : res.slopes) j["slopes"][name] = slope;
        detail::write_file(fs::path(cfg.output) / "summary.json", j.dump(2) + "\n");
        if (!quiet)
            for (const auto& [name, slope] : res.slopes) log << name << ": global-error slope " << slope << "\n";
        return 0;
    }

    if (cfg.experiment.kind == "rate_sweep") {
        RateStudyConfig rcfg;
        rcfg.deltas = cfg.experiment.deltas;
        rcfg.nu = cfg.experiment.nu;
        rcfg.r_f = cfg.experiment.r_f;
        rcfg.base_seed = cfg.experiment.seed;
        RateStudyResult res = rate_study(op, pen, x_dagger, tab, policy, cfg.stop.tau, rcfg);
        detail::write_file(fs::path(cfg.output) / "rate.csv", res.csv());
        bool all_stopped = true, all_bounds = true;
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : res.rows) {
            all_stopped = all_stopped && r.stopped;
            all_bounds = all_bounds && r.bound_ok;
            rows.push_back({{"delta", r.delta}, {"stopped", r.stopped}, {"t_star", r.t_star},
                            {"steps", r.steps}, {"bregman_error", r.bregman_error}, {"bound_ok", r.bound_ok}});
        }
        nlohmann::json j{{"experiment", "rate_sweep"}, {"rows", rows}, {"all_stopped", all_stopped},
                         {"all_bounds_hold", all_bounds}};
        if (res.slope) j["slope"] = *res.slope;
        if (eta_hat) j["eta_estimate"] = *eta_hat;
        detail::write_file(fs::path(cfg.output) / "summary.json", j.dump(2) + "\n");
        if (!quiet) {
            if (res.slope) log << "rate sweep: fitted slope " << *res.slope << "\n";
            else log << "rate sweep: slope undefined (fewer than two stopped rows)\n";
        }
        return all_stopped ? 0 : 2;
    }

    // single run
    const double delta = cfg.experiment.deltas.front();
    const Vector y = op.apply(x_dagger);
    const NoisyData data = make_noisy(y, delta, cfg.experiment.seed, op.range_weight());
    Problem prob{op, pen, data.y_delta};
    IntegrateOptions opts;
    opts.rule = DiscrepancyRule(cfg.stop.tau, delta);
    opts.refine = cfg.stop.refine;
    opts.refine_opt.rel_tol = cfg.stop.refine_tol;
    opts.reference = x_dagger;
    Trajectory traj = integrate(prob, tab, policy, opts);

    detail::write_file(fs::path(cfg.output) / "trajectory.csv", detail::trajectory_csv(traj));
    nlohmann::json j{{"experiment", "single"},
                     {"stop_reason", to_string(traj.reason)},
                     {"steps", traj.steps_taken},
                     {"final_residual", traj.residuals.back()},
                     {"delta", delta},
                     {"tau", cfg.stop.tau},
                     {"events", detail::events_json(traj.events)}};
    if (traj.stop_report) {
        j["T_star"] = traj.stop_report->t_star;
        j["residual_at_stop"] = traj.stop_report->residual_at_stop;
        j["refined"] = traj.stop_report->refined;
    } else {
        j["T_star"] = nullptr;
    }
    j["eta_declared"] = op.metadata().eta;
    if (eta_hat) j["eta_estimate"] = *eta_hat;
    detail::write_file(fs::path(cfg.output) / "summary.json", j.dump(2) + "\n");

    if (!quiet) {
        log << "run: " << to_string(traj.reason) << " after " << traj.steps_taken << " steps, residual "
            << traj.residuals.back() << "\n";
        if (traj.stop_report) log << "T* = " << traj.stop_report->t_star << "\n";
    }
    switch (traj.reason) {
        case StopReason::stopped_by_discrepancy: return 0;
        case StopReason::max_steps_reached: return 2;
        case StopReason::aborted: return 3;
    }
    return 3;
}

}  // namespace dgflow
