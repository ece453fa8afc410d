#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "dgflow/integrate.hpp"
#include "dgflow/io.hpp"
#include "dgflow/noise.hpp"

namespace dgflow {

/// Closed-form solution at time t of the quadratic-penalty linear dual flow
///   xi' = -M^T (M xi - y_delta),  x = xi,  x(0) = 0:
/// over the singular system M = sum_k sigma_k u_k v_k^T,
///   x(t) = sum_k (1 - exp(-sigma_k^2 t)) <u_k, y_delta> / sigma_k * v_k.
/// Singular values below 1e-12 only contribute their annihilated component
/// and are skipped. Serves as the independent oracle for integrator accuracy.
inline Vector showalter_oracle(const Matrix& m, const Vector& y_delta, double t) {
    require_size(y_delta, m.rows(), "showalter_oracle");
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    Vector x = Vector::Zero(m.cols());
    for (Index k = 0; k < sv.size(); ++k) {
        const double sigma = sv[k];
        if (sigma < 1e-12) continue;
        const double coef = -std::expm1(-sigma * sigma * t) / sigma;  // (1 - e^{-s^2 t}) / s
        x += coef * svd.matrixU().col(k).dot(y_delta) * svd.matrixV().col(k);
    }
    return x;
}

/// A known solution of F(x) = y, either constructed (y := F(x_dagger)) or
/// loaded from disk.
struct ReferenceSolution {
    Vector x_dagger;
    enum class Source { constructed, loaded } source = Source::constructed;
};

// ---------------------------------------------------------------------------
// rate studies

struct RateStudyConfig {
    std::vector<double> deltas;      // strictly decreasing, all positive
    double nu = 2.0;                 // declared stability exponent, in [1, 2] for p = 2
    std::optional<double> r_f;       // declared stability constant, enables the bound column
    std::uint64_t base_seed = 0;     // row i uses base_seed + i

    void validate() const {
        if (deltas.empty()) throw std::invalid_argument("rate study: empty delta list");
        for (std::size_t i = 0; i < deltas.size(); ++i) {
            if (!(deltas[i] > 0.0)) throw std::invalid_argument("rate study: deltas must be positive");
            if (i > 0 && !(deltas[i] < deltas[i - 1]))
                throw std::invalid_argument("rate study: deltas must be strictly decreasing");
        }
        if (nu < 1.0 || nu > 2.0) throw std::invalid_argument("rate study: nu must lie in [1, 2]");
    }
};

struct RateRow {
    double delta = 0.0;
    double t_star = 0.0;
    long steps = 0;
    double residual_at_stop = 0.0;
    double bregman_error = 0.0;
    std::optional<double> bound_rhs;
    bool stopped = false;
    bool bound_ok = true;
};

struct RateStudyResult {
    std::vector<RateRow> rows;
    std::optional<double> slope;  // log D vs log delta over stopped rows

    std::string csv() const {
        std::ostringstream os;
        os << "delta,T_star,steps,residual_at_stop,bregman_error,bound_rhs\n";
        for (const auto& r : rows) {
            os << fmt_g17(r.delta) << ',' << fmt_g17(r.t_star) << ',' << r.steps << ','
               << fmt_g17(r.residual_at_stop) << ',' << fmt_g17(r.bregman_error) << ','
               << (r.bound_rhs ? fmt_g17(*r.bound_rhs) : "") << '\n';
        }
        return os.str();
    }
};

/// Sweeps the noise level: per delta, generates data of exact noise norm,
/// integrates to the discrepancy stop and records the Bregman error
/// D_{xi(T*)} Theta(x_dagger, x(T*)) together with the declared-bound
/// right-hand side R_F (tau+1)^nu delta^nu. Rows that never stop are flagged
/// and excluded from the slope fit.
inline RateStudyResult rate_study(const ForwardOperator& op, const Penalty& pen, const Vector& x_dagger,
                                  const ButcherTableau& tab, const StepPolicy& policy, double tau,
                                  const RateStudyConfig& cfg) {
    cfg.validate();
    const Vector y = op.apply(x_dagger);
    RateStudyResult out;
    std::vector<double> fit_d, fit_err;
    for (std::size_t i = 0; i < cfg.deltas.size(); ++i) {
        const double delta = cfg.deltas[i];
        const NoisyData data = make_noisy(y, delta, cfg.base_seed + i, op.range_weight());
        Problem prob{op, pen, data.y_delta};
        IntegrateOptions opts;
        opts.rule = DiscrepancyRule(tau, delta);
        opts.reference = x_dagger;
        StepPolicy row_policy = policy;
        row_policy.record_states = false;
        Trajectory traj = integrate(prob, tab, row_policy, opts);

        RateRow row;
        row.delta = delta;
        row.stopped = traj.reason == StopReason::stopped_by_discrepancy;
        row.steps = traj.steps_taken;
        if (row.stopped) {
            row.t_star = traj.stop_report->t_star;
            row.residual_at_stop = traj.stop_report->residual_at_stop;
            row.bregman_error = pen.bregman(x_dagger, traj.final_state.x, traj.final_state.xi);
            if (cfg.r_f) {
                row.bound_rhs = *cfg.r_f * std::pow(tau + 1.0, cfg.nu) * std::pow(delta, cfg.nu);
                row.bound_ok = row.bregman_error <= *row.bound_rhs;
            }
            fit_d.push_back(delta);
            fit_err.push_back(row.bregman_error);
        }
        out.rows.push_back(row);
    }
    if (fit_d.size() >= 2) {
        const double s = loglog_slope(fit_d, fit_err);
        if (std::isfinite(s)) out.slope = s;
    }
    return out;
}

// ---------------------------------------------------------------------------
// order studies

struct OrderStudyRow {
    std::string tableau;
    double dt = 0.0;
    double error = 0.0;  // ||x_N - oracle(t_N)|| at t_N = N dt ~ horizon
};

struct OrderStudyResult {
    std::vector<OrderStudyRow> rows;
    std::map<std::string, double> slopes;

    std::string csv() const {
        std::ostringstream os;
        os << "tableau,dt,error\n";
        for (const auto& r : rows) os << r.tableau << ',' << fmt_g17(r.dt) << ',' << fmt_g17(r.error) << '\n';
        return os.str();
    }
};

/// Global error against the Showalter oracle at a fixed horizon for each
/// (tableau, dt). Requires the quadratic penalty and a dense linear operator,
/// the setting in which the oracle is exact.
inline OrderStudyResult order_study(const ForwardOperator& op, const Vector& y_delta, double horizon,
                                    const std::vector<std::pair<std::string, ButcherTableau>>& tableaux,
                                    const std::vector<double>& dts, double stage_tol = 1e-12,
                                    int stage_max_iter = 400) {
    if (op.kind() != OperatorKind::dense_linear)
        throw std::invalid_argument("order_study: needs a dense_linear operator");
    if (!(horizon > 0.0)) throw std::invalid_argument("order_study: horizon must be positive");
    Penalty pen = Penalty::quadratic();
    Problem prob{op, pen, y_delta};
    OrderStudyResult out;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per;
    for (const auto& [name, tab] : tableaux) {
        for (const double dt : dts) {
            const long n_steps = std::max<long>(1, std::lround(horizon / dt));
            StepPolicy policy;
            policy.mode = StepPolicy::Mode::fixed;
            policy.dt = dt;
            policy.max_steps = n_steps;
            policy.stage_tol = stage_tol;
            policy.stage_max_iter = stage_max_iter;
            policy.record_states = false;
            Trajectory traj = integrate(prob, tab, policy);
            const double t_end = traj.final_state.t;
            const double err = (traj.final_state.x - showalter_oracle(op.matrix(), y_delta, t_end)).norm();
            out.rows.push_back({name, dt, err});
            per[name].first.push_back(dt);
            per[name].second.push_back(err);
        }
        const double s = loglog_slope(per[name].first, per[name].second);
        if (std::isfinite(s)) out.slopes[name] = s;
    }
    return out;
}

// ---------------------------------------------------------------------------
// feature-recovery demos

struct SupportScore {
    double precision = 0.0;
    double recall = 0.0;
};

inline SupportScore support_score(const Vector& truth, const Vector& estimate, double threshold = 1e-6) {
    require_same_size(truth, estimate, "support_score");
    long true_pos = 0, est_pos = 0, hit = 0;
    for (Index i = 0; i < truth.size(); ++i) {
        const bool t = std::abs(truth[i]) > threshold;
        const bool e = std::abs(estimate[i]) > threshold;
        true_pos += t;
        est_pos += e;
        hit += (t && e);
    }
    SupportScore s;
    s.precision = est_pos == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(est_pos);
    s.recall = true_pos == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(true_pos);
    return s;
}

/// Seeded well-conditioned matrix: 2 I + 0.5 G / sqrt(n) keeps the spectrum
/// close to 2 and the condition number small for moderate n.
inline Matrix well_conditioned_matrix(Index n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix g(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) g(i, j) = rng.gaussian();
    return 2.0 * Matrix::Identity(n, n) + (0.5 / std::sqrt(static_cast<double>(n))) * g;
}

struct SparseDemoReport {
    Vector x_dagger;
    Vector x_elastic;
    Vector x_quadratic;
    SupportScore elastic;
    SupportScore quadratic;
    double t_star_elastic = 0.0;
    double t_star_quadratic = 0.0;
    bool elastic_stopped = false;
    bool quadratic_stopped = false;
};

/// Sparse recovery contrast: one seeded instance solved with the elastic-net
/// penalty and once more with the plain quadratic penalty. The elastic-net
/// flow thresholds small dual components to exact zeros, so its support is
/// sharp; the quadratic flow produces dense iterates.
inline SparseDemoReport sparse_recovery_demo(Index n, Index support_size, double delta, std::uint64_t seed,
                                             double beta = 0.5, double tau = 2.5) {
    if (support_size < 0 || support_size > n) throw std::invalid_argument("sparse_recovery_demo: bad support size");
    const Matrix m = well_conditioned_matrix(n, seed);
    Rng rng(seed + 1);
    Vector x_dagger = Vector::Zero(n);
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < support_size; ++i) {  // Fisher-Yates prefix
        const Index j = i + static_cast<Index>(rng.uniform() * static_cast<double>(n - i));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        const double mag = rng.uniform(1.0, 2.0);
        x_dagger[idx[static_cast<std::size_t>(i)]] = rng.uniform() < 0.5 ? mag : -mag;
    }

    OperatorOptions opt;
    opt.rho = 2.0 * x_dagger.norm() + 1.0;
    ForwardOperator op = ForwardOperator::dense_linear(m, opt);
    const Vector y = op.apply(x_dagger);
    const NoisyData data = make_noisy(y, delta, seed + 2, op.range_weight());

    SparseDemoReport rep;
    rep.x_dagger = x_dagger;
    StepPolicy policy;
    policy.max_steps = 200000;
    policy.record_states = false;

    auto solve = [&](const Penalty& pen, Vector& x_out, double& t_star, bool& stopped) {
        Problem prob{op, pen, data.y_delta};
        IntegrateOptions opts;
        opts.rule = DiscrepancyRule(tau, delta);
        Trajectory traj = integrate(prob, ButcherTableau::explicit_euler(), policy, opts);
        x_out = traj.final_state.x;
        stopped = traj.reason == StopReason::stopped_by_discrepancy;
        t_star = stopped ? traj.stop_report->t_star : traj.final_state.t;
    };

    solve(Penalty::elastic_net(beta), rep.x_elastic, rep.t_star_elastic, rep.elastic_stopped);
    solve(Penalty::quadratic(), rep.x_quadratic, rep.t_star_quadratic, rep.quadratic_stopped);
    rep.elastic = support_score(x_dagger, rep.x_elastic);
    rep.quadratic = support_score(x_dagger, rep.x_quadratic);
    return rep;
}

struct TvDemoReport {
    Vector x_dagger;
    Vector x_tv;
    double tv_truth = 0.0;
    double tv_estimate = 0.0;
    double t_star = 0.0;
    bool stopped = false;
};

/// Piecewise-constant recovery with the TV penalty on a seeded
/// well-conditioned linear instance; reports terminal TV against TV(x_dagger).
inline TvDemoReport tv_recovery_demo(Index n, double delta, std::uint64_t seed, double beta = 0.5,
                                     double tau = 2.5) {
    const Matrix m = well_conditioned_matrix(n, seed);
    Vector x_dagger = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n - 1);
        if (s >= 0.2 && s < 0.45) x_dagger[i] = 1.0;
        else if (s >= 0.6 && s < 0.8) x_dagger[i] = -0.5;
    }

    OperatorOptions opt;
    opt.rho = 2.0 * x_dagger.norm() + 1.0;
    ForwardOperator op = ForwardOperator::dense_linear(m, opt);
    const Vector y = op.apply(x_dagger);
    const NoisyData data = make_noisy(y, delta, seed + 2, op.range_weight());

    TvDemoReport rep;
    rep.x_dagger = x_dagger;
    rep.tv_truth = tv_value(x_dagger);
    Problem prob{op, Penalty::tv_quadratic(beta, n), data.y_delta};
    StepPolicy policy;
    policy.max_steps = 200000;
    policy.record_states = false;
    IntegrateOptions opts;
    opts.rule = DiscrepancyRule(tau, delta);
    Trajectory traj = integrate(prob, ButcherTableau::explicit_euler(), policy, opts);
    rep.x_tv = traj.final_state.x;
    rep.stopped = traj.reason == StopReason::stopped_by_discrepancy;
    rep.t_star = rep.stopped ? traj.stop_report->t_star : traj.final_state.t;
    rep.tv_estimate = tv_value(rep.x_tv);
    return rep;
}

}  // namespace dgflow
