#include <catch2/catch_amalgamated.hpp>

#include "dgflow/integrate.hpp"
#include "dgflow/random.hpp"
#include "testutil.hpp"

using namespace dgflow;

namespace {
Vector vec(std::initializer_list<double> vals) {
    Vector v(static_cast<Index>(vals.size()));
    Index i = 0;
    for (double x : vals) v[i++] = x;
    return v;
}
}  // namespace

TEST_CASE("discrepancy rule basics") {
    const DiscrepancyRule rule(2.0, 0.1);
    CHECK_FALSE(should_stop(rule, 0.3));
    CHECK(should_stop(rule, 0.2));  // boundary inclusive
    CHECK(should_stop(rule, 0.15));

    const DiscrepancyRule noise_free(2.0, 0.0);
    CHECK_FALSE(should_stop(noise_free, 1e-300));
    CHECK(should_stop(noise_free, 0.0));

    CHECK_THROWS_AS(DiscrepancyRule(1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(DiscrepancyRule(2.0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(should_stop(rule, -1.0), std::invalid_argument);
}

TEST_CASE("phi formulas") {
    const Penalty quad = Penalty::quadratic();
    DualState s;
    s.x = vec({1.0, 2.0});
    s.xi = s.x;
    const Vector x_hat = vec({0.0, 0.5});
    CHECK(phi(quad, x_hat, s) == Catch::Approx(0.5 * (x_hat - s.x).squaredNorm()).epsilon(1e-14));
    CHECK(phi(quad, s.x, s) == 0.0);

    const Penalty en = Penalty::elastic_net(0.5);
    DualState t;
    t.x = vec({1.0, -2.0});
    t.xi = en.select_subgradient(t.x);
    CHECK(phi(en, t.x, t) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("residual square integral") {
    CHECK(residual_square_integral({0.0}, {3.0}) == 0.0);

    // constant residual r over horizon H: trapezoid is exact, r^2 H
    std::vector<double> times, res;
    for (int i = 0; i <= 10; ++i) {
        times.push_back(0.7 * i);
        res.push_back(1.5);
    }
    CHECK(residual_square_integral(times, res) == Catch::Approx(1.5 * 1.5 * 7.0).epsilon(1e-14));

    // residual e^{-t} over [0, 10]: integral of e^{-2t} is (1 - e^{-20}) / 2
    times.clear();
    res.clear();
    const double dt = 0.001;
    for (int i = 0; i <= 10000; ++i) {
        times.push_back(dt * i);
        res.push_back(std::exp(-dt * i));
    }
    CHECK(residual_square_integral(times, res) ==
          Catch::Approx(0.5 * (1.0 - std::exp(-20.0))).epsilon(1e-6));

    CHECK_THROWS_AS(residual_square_integral({0.0, 1.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("find_crossings locates downward crossings") {
    const DiscrepancyRule rule(2.0, 0.5);  // threshold 1
    const std::vector<double> res = {3.0, 2.0, 0.9, 1.5, 0.8, 0.7};
    const auto idx = find_crossings(res, rule);
    REQUIRE(idx.size() == 2);
    CHECK(idx[0] == 2);
    CHECK(idx[1] == 4);
}

TEST_CASE("refined crossing matches the analytic stopping time of the scalar flow") {
    // residual along explicit Euler is (1 - dt)^n |y_delta|; the continuous
    // flow crosses tau delta at T = ln(|y_delta| / (tau delta)). The discrete
    // crossing drifts from the continuous one by about T dt / 2, so the
    // one-step agreement needs T dt / 2 < dt, i.e. T < 2.
    const double y = 1.0, tau = 2.5, dt = 0.05;
    const double t_continuous = 1.5;
    const double delta = y * std::exp(-t_continuous) / tau;
    Problem p{ForwardOperator::dense_linear(Matrix::Identity(1, 1)), Penalty::quadratic(),
              Vector::Constant(1, y)};
    StepPolicy policy;
    policy.mode = StepPolicy::Mode::fixed;
    policy.dt = dt;
    policy.max_steps = 100000;
    IntegrateOptions opts;
    opts.rule = DiscrepancyRule(tau, delta);
    const Trajectory traj = integrate(p, ButcherTableau::explicit_euler(), policy, opts);
    REQUIRE(traj.reason == StopReason::stopped_by_discrepancy);
    REQUIRE(traj.stop_report.has_value());
    const StopReport& rep = *traj.stop_report;
    CHECK(rep.refined);
    CHECK(rep.residual_at_stop <= tau * delta * (1.0 + 1e-6));
    CHECK(std::abs(rep.residual_at_stop - tau * delta) <= 1e-3 * tau * delta);
    CHECK(std::abs(rep.t_star - t_continuous) <= dt);

    // exact oracle for the refined time: n full steps with (1-dt) decay, then
    // the partial step solving (1 - alpha dt) r_n = tau delta
    // the refinement tolerance 1e-3 tau delta in the residual maps to about
    // 1e-3 in time for this decay rate
    const int n_full = static_cast<int>(std::floor(rep.t_star / dt));
    const double r_before = std::pow(1.0 - dt, n_full) * y;
    const double alpha_exact = (1.0 - tau * delta / r_before) / dt;
    const double t_star_exact = n_full * dt + alpha_exact * dt;
    CHECK(rep.t_star == Catch::Approx(t_star_exact).margin(1.5e-3));
}

TEST_CASE("crossing exactly at the full step returns alpha = 1") {
    // engineered so that the residual after one full step is exactly tau delta
    const double dt = 0.25;
    const double y = 1.0;
    const double after_one = (1.0 - dt) * y;
    const double tau = 2.0;
    const double delta = after_one / tau;
    Problem p{ForwardOperator::dense_linear(Matrix::Identity(1, 1)), Penalty::quadratic(),
              Vector::Constant(1, y)};
    StepPolicy policy;
    policy.mode = StepPolicy::Mode::fixed;
    policy.dt = dt;
    policy.max_steps = 10;
    DualState s0;
    s0.t = 0.0;
    s0.x = Vector::Zero(1);
    s0.xi = Vector::Zero(1);
    const RefinedCrossing rc =
        refine_crossing(p, ButcherTableau::explicit_euler(), s0, dt, DiscrepancyRule(tau, delta), policy);
    CHECK(rc.report.t_star == dt);
    CHECK(rc.report.residual_at_stop == Catch::Approx(tau * delta).epsilon(1e-12));
}

TEST_CASE("refine_crossing validates its bracket") {
    Problem p{ForwardOperator::dense_linear(Matrix::Identity(1, 1)), Penalty::quadratic(),
              Vector::Constant(1, 1.0)};
    StepPolicy policy;
    policy.mode = StepPolicy::Mode::fixed;
    policy.dt = 0.1;
    DualState s0;
    s0.t = 0.0;
    s0.x = Vector::Zero(1);
    s0.xi = Vector::Zero(1);
    // threshold far above the current residual: state_before does not violate the rule
    CHECK_THROWS_AS(
        refine_crossing(p, ButcherTableau::explicit_euler(), s0, 0.1, DiscrepancyRule(2.0, 10.0), policy),
        std::invalid_argument);
    // threshold unreachable within one step
    CHECK_THROWS_AS(
        refine_crossing(p, ButcherTableau::explicit_euler(), s0, 0.1, DiscrepancyRule(2.0, 1e-6), policy),
        std::invalid_argument);
}

TEST_CASE("stopping existence on the bundled problems") {
    // every run with ||F(x0) - y_delta|| > tau delta and delta > 0 stops
    Rng rng(41);
    const double tau = 2.5;
    const double delta = 1e-2;
    const Matrix m = testutil::conditioned_matrix(10, 10, 0.5, 2.0, 43);

    std::vector<Problem> problems;
    {
        ForwardOperator op = ForwardOperator::dense_linear(m);
        const Vector x_dagger = rng.gaussian_vector(10);
        Vector y = op.apply(x_dagger);
        y += delta * (rng.gaussian_vector(10).normalized());
        problems.push_back({op, Penalty::quadratic(), y});
        problems.push_back({op, Penalty::elastic_net(0.2), y});
    }
    {
        ForwardOperator op = ForwardOperator::diagonal_cubic(0.1, 10);
        Vector x_dagger(10);
        for (Index i = 0; i < 10; ++i) x_dagger[i] = rng.uniform(0.2, 0.5);
        Vector y = op.apply(x_dagger);
        y += delta * (rng.gaussian_vector(10).normalized());
        problems.push_back({op, Penalty::quadratic(), y});
    }

    for (const auto& p : problems) {
        REQUIRE(residual_norm(p, p.op.metadata().x0) > tau * delta);
        StepPolicy policy;
        policy.max_steps = 20000;
        policy.record_states = false;
        IntegrateOptions opts;
        opts.rule = DiscrepancyRule(tau, delta);
        const Trajectory traj = integrate(p, ButcherTableau::explicit_euler(), policy, opts);
        CHECK(traj.reason == StopReason::stopped_by_discrepancy);
        CHECK(traj.stop_report->residual_at_stop <= tau * delta * (1.0 + 1e-12));
    }
}

TEST_CASE("iterates remain near the solution on an assumption-compliant problem") {
    // noise free, rho chosen so that D(x_hat, x0) = c0 rho^2 exactly
    const Matrix m = testutil::conditioned_matrix(8, 8, 0.6, 1.8, 47);
    Rng rng(53);
    const Vector x_dagger = rng.gaussian_vector(8);
    OperatorOptions opt;
    opt.rho = x_dagger.norm();
    ForwardOperator op = ForwardOperator::dense_linear(m, opt);
    Problem p{op, Penalty::quadratic(), op.apply(x_dagger)};
    StepPolicy policy;
    policy.max_steps = 3000;
    const Trajectory traj = integrate(p, ButcherTableau::explicit_euler(), policy);
    const double rho = opt.rho.value();
    for (const auto& s : traj.states) {
        CHECK((s.x - x_dagger).norm() <= rho * 1.05);
        CHECK(op.in_working_ball(s.x));
    }
    for (const auto& e : traj.events) CHECK(e.kind != EventKind::ball_exit_warning);
}
