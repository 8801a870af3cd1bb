#include "doctest.h"
#include "oracles.hpp"

#include "spinhjb/driver.hpp"
#include "spinhjb/scenarios.hpp"

#include <cmath>

using namespace spinhjb;

namespace {

WalkIncrements outer_walk(const ScenarioSpec& s, std::uint64_t seed) {
    return sample_walk(SeedPolicy{seed}.derive(stream::outer), 0, s.partition.steps, s.params.dims(),
                       s.partition.tau());
}

}  // namespace

TEST_CASE("zero gradient reproduces the uncontrolled path") {
    auto spec = preset("spin3");
    spec.params.delta = 0;
    const auto walk = outer_walk(spec, 3);
    const auto run = run_algorithm(spec.params, spec.partition, spec.initial, zero_oracle(), walk);
    const auto aux = simulate_path(spec.params, spec.initial, spec.partition, walk, PathMode::auxiliary);
    CHECK(run.trajectory.states == aux.states);
    for (const auto& u : run.u_state) CHECK(squared_norm(u) == 0.0);
    for (const auto& a : orthogonality_angle(run, 1)) CHECK(!a.has_value());
}

TEST_CASE("Monte-Carlo oracle with a constant functional gives zero controls") {
    auto spec = preset("spin3");
    spec.estimator.samples = 10;
    const auto payoff = TerminalPayoff::custom([](std::span<const double>, double) { return 0.0; });
    spec.partition = Partition(0.5, 5);
    const TargetGrid g5 = tabulate_target(spec.target, spec.partition);
    const auto oracle = monte_carlo_oracle(spec.params, spec.partition, spec.estimator, payoff, g5, SeedPolicy{1});
    const auto walk = outer_walk(spec, 1);
    const auto run = run_algorithm(spec.params, spec.partition, spec.initial, oracle, walk);
    for (const auto& u : run.u_state) CHECK(squared_norm(u) == 0.0);
    for (const auto& w : run.at_state) CHECK(w.w == 1.0);
}

TEST_CASE("exact oracle on test problem 1") {
    const auto spec = preset("test1");
    const auto res = run_scenario(spec, exact_oracle(spec.partition, exact_solution_for(spec)));
    const auto& run = res.run;
    CHECK(run.steps() == 50);
    CHECK(max_orthogonality_angle(run) < 1e-12);
    for (const auto& s : run.trajectory.states) CHECK(s.max_norm_defect() < 1e-10);
    // W = -log(w)/beta decreases with m3, so the control has a positive e3 part
    CHECK(run.u_state[0][2] > 0.0);
    // at t_l, u evaluated from the closed form
    const auto ex = exact_solution_test1(0.0, spec.initial);
    const Field u0 = feedback_control(spec.params, spec.initial, ex.grad_W);
    CHECK(run.u_state[0] == u0);
}

TEST_CASE("underflow aborts with the step position") {
    auto spec = preset("test1");
    spec.params.delta = 1.0;
    spec.params.lambda = 1e-4;
    spec.params.nu = 0.1;
    spec.estimator.samples = 4;
    const TargetProfile far = TargetProfile::constant(SpinConfiguration(Field{-1, 0, 0}));
    const TargetGrid grid = tabulate_target(far, spec.partition);
    const auto oracle = monte_carlo_oracle(spec.params, spec.partition, spec.estimator, spec.payoff, grid,
                                           SeedPolicy{1});
    try {
        (void)run_algorithm(spec.params, spec.partition, spec.initial, oracle, outer_walk(spec, 1));
        FAIL("expected NumericalFailure");
    } catch (const NumericalFailure& e) {
        CHECK(std::string(e.what()).find("step 0") != std::string::npos);
        CHECK(e.flagged_fraction() > 0.0);
    }
}

TEST_CASE("realized cost") {
    ModelParams p;
    p.alpha = 0.1;
    p.nu = 0.3;
    p.lambda = 2.0;
    p.delta = 0.5;
    p.horizon = 0.5;
    p.d_diag = {{0, 0, 0}};
    const Field e1{1, 0, 0};
    const Partition part(0.5, 10);
    PathSample path{part, std::vector<SpinConfiguration>(11, SpinConfiguration(e1))};
    const TargetGrid same = tabulate_target(TargetProfile::constant(SpinConfiguration(e1)), part);
    const auto payoff = TerminalPayoff::quadratic_tracking(SpinConfiguration(e1));
    const std::vector<Field> zero(10, Field{0, 0, 0});
    CHECK(realized_cost(p, path, zero, same, payoff, 2).total() == 0.0);

    // delta = 0: control and terminal parts only
    p.delta = 0.0;
    const std::vector<Field> u(10, Field{0, 1, 0});
    const TargetGrid opposite = tabulate_target(TargetProfile::constant(SpinConfiguration(Field{-1, 0, 0})), part);
    const auto c = realized_cost(p, path, u, opposite, TerminalPayoff::quadratic_tracking(SpinConfiguration(Field{0, 1, 0})), 2);
    CHECK(c.running == 0.0);
    CHECK(c.control == doctest::Approx(0.5 * 2.0 * 0.5));
    CHECK(c.terminal == doctest::Approx(1.0));
    CHECK(c.total() == doctest::Approx(1.5));

    p.delta = 1.0;
    const auto d = realized_cost(p, path, zero, opposite, payoff, 2);
    CHECK(d.running == doctest::Approx(4 * 0.5));
    CHECK_THROWS(realized_cost(p, path, std::vector<Field>(3, Field{0, 0, 0}), same, payoff, 2));
}

TEST_CASE("err_metric and angles") {
    const Partition part(0.5, 4);
    PathSample a{part, std::vector<SpinConfiguration>(5, SpinConfiguration(Field{1, 0, 0}))};
    PathSample b{part, std::vector<SpinConfiguration>(5, SpinConfiguration(Field{-1, 0, 0}))};
    for (double e : err_metric(a, a)) CHECK(e == 0.0);
    for (double e : err_metric(a, b)) CHECK(e == 4.0);
    PathSample c{Partition(0.5, 5), std::vector<SpinConfiguration>(6, SpinConfiguration(Field{1, 0, 0}))};
    CHECK_THROWS(err_metric(a, c));

    CHECK(*normalized_inner({1, 0, 0}, {0, 3, 0}) == 0.0);
    CHECK(*normalized_inner({1, 0, 0}, {-2, 0, 0}) == 1.0);
    CHECK(!normalized_inner({1, 0, 0}, {0, 0, 0}).has_value());
}

TEST_CASE("spin3 smoke run at reduced budget") {
    auto spec = preset("spin3");
    spec.estimator.samples = 20;
    spec.estimator.hbar = 0;
    const auto res = run_scenario(spec);
    CHECK(std::isfinite(res.cost.total()));
    CHECK(res.cost.running >= 0);
    CHECK(res.cost.control >= 0);
    CHECK(res.cost.terminal >= 0);
    CHECK(max_orthogonality_angle(res.run) < 1e-8);
    for (const auto& s : res.run.trajectory.states) CHECK(s.max_norm_defect() < 1e-10);
    for (std::size_t l = 0; l < res.run.steps(); ++l) {
        for (std::size_t i = 0; i < 3; ++i) {
            const Vec3 us = block(res.run.u_state[l], i);
            const Vec3 um = block(res.run.u_mid[l], i);
            CHECK(std::abs(dot(us, res.run.trajectory.states[l].spin(i))) <= 1e-12 * norm(us));
            CHECK(std::abs(dot(um, res.run.midpoints[l].spin(i))) <= 1e-12 * norm(um));
        }
    }
}

TEST_CASE("runs are pure functions of scenario and seeds") {
    auto spec = preset("spin3");
    spec.estimator.samples = 10;
    spec.partition = Partition(0.5, 10);
    const auto a = run_scenario(spec);
    spec.estimator.threads = 3;
    const auto b = run_scenario(spec);
    CHECK(a.run.trajectory.states == b.run.trajectory.states);
    CHECK(a.run.u_state == b.run.u_state);
    CHECK(trajectory_csv(a) == trajectory_csv(b));
    spec.seeds.estimator = 2;
    const auto c = run_scenario(spec);
    CHECK(!(a.run.u_state == c.run.u_state));
}
