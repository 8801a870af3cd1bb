#include "doctest.h"
#include "oracles.hpp"

#include "spinhjb/model.hpp"

#include <cmath>
#include <numbers>

using namespace spinhjb;

namespace {

ModelParams random_model(std::mt19937_64& gen, std::size_t n, double alpha) {
    std::uniform_real_distribution<double> u(-3, 3);
    ModelParams p;
    p.alpha = alpha;
    p.nu = 0.4;
    p.lambda = 0.5;
    p.c_ext = 0.7;
    p.horizon = 1.0;
    for (std::size_t i = 0; i < n; ++i) p.d_diag.push_back({u(gen), u(gen), u(gen)});
    p.exchange = ExchangeMatrix::ring(n);
    return p;
}

}  // namespace

TEST_CASE("beta") {
    ModelParams p;
    p.c_ext = 1;
    p.alpha = 0;
    p.lambda = 1;
    p.nu = 1;
    CHECK(beta(p) == 1.0);
    p.c_ext = 0.1;
    p.alpha = 0.1;
    p.lambda = 1e-3;
    p.nu = 0.3;
    CHECK(beta(p) == doctest::Approx(112.2222222222));
    p.c_ext = 1;
    p.alpha = 1;
    p.lambda = 1;
    p.nu = 0.5;
    CHECK(beta(p) == doctest::Approx(8.0));
    p.nu = 0;
    CHECK_THROWS_AS(beta(p), std::invalid_argument);
}

TEST_CASE("exchange builders") {
    // ring annihilates spin-constant vectors, so q_apply reduces to D m
    ModelParams p;
    p.d_diag = {{-5, 1, 3.5}, {-5, 1, 3.5}, {-5, 1, 3.5}};
    p.exchange = ExchangeMatrix::ring(3);
    const Field m{0.6, 0.8, 0, 0.6, 0.8, 0, 0.6, 0.8, 0};
    const Field q = q_apply(p, m);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(q[3 * i] == doctest::Approx(-3.0));
        CHECK(q[3 * i + 1] == doctest::Approx(0.8));
        CHECK(q[3 * i + 2] == 0.0);
    }

    ModelParams z;
    z.d_diag = {{0, 0, 0}};
    CHECK(q_apply(z, Field{1, 0, 0}) == Field{0, 0, 0});

    ModelParams two;
    two.d_diag = {{0, 0, 0}, {0, 0, 0}};
    two.exchange = ExchangeMatrix::two_spin(1.7);
    const Field j = q_apply(two, Field{1, 0, 0, 0, 1, 0});
    const Field want{1.7, -1.7, 0, -1.7, 1.7, 0};
    for (std::size_t k = 0; k < 6; ++k) CHECK(j[k] == doctest::Approx(want[k]));

    // ring agrees with its displayed formula on random input
    std::mt19937_64 gen(2);
    const auto v = oracle::random_field(gen, 5);
    Field out(15);
    ExchangeMatrix::ring(5).apply(v, out);
    for (std::size_t i = 0; i < 5; ++i) {
        const auto next = oracle::at(v, (i + 1) % 5);
        const auto prev = oracle::at(v, (i + 4) % 5);
        const oracle::V3 want_i = -next + 2 * oracle::at(v, i) - prev;
        for (int l = 0; l < 3; ++l) CHECK(out[3 * i + l] == doctest::Approx(want_i(l)));
    }

    CHECK_THROWS_AS(ExchangeMatrix::dense(1, {1, 2, 0, 0, 1, 0, 0, 0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(ExchangeMatrix::dense(1, {-1, 0, 0, 0, 1, 0, 0, 0, 1}), std::invalid_argument);
    CHECK_NOTHROW(ExchangeMatrix::dense(1, {2, 1, 0, 1, 2, 0, 0, 0, 0}));
    CHECK_THROWS_AS(ExchangeMatrix::two_spin(-1.0), std::invalid_argument);
}

TEST_CASE("drifts are tangent and consistent") {
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 100; ++trial) {
        const ModelParams p = random_model(gen, 4, 0.3);
        const SpinConfiguration m(oracle::random_unit_field(gen, 4));
        const Field u = oracle::random_field(gen, 4);
        const Field f = drift_f(p, m, u);
        const Field f0 = drift_f(p, m, Field(12, 0.0));
        const Field b = drift_b(p, m);
        const Field bs = drift_b_sigma_form(p, m);
        for (std::size_t k = 0; k < 12; ++k) {
            CHECK(std::abs(b[k] - bs[k]) < 1e-12);
            CHECK(std::abs(f0[k] + b[k]) < 1e-12);
        }
        for (std::size_t i = 0; i < 4; ++i) {
            const Vec3 mi = m.spin(i);
            CHECK(std::abs(dot(block(f, i), mi)) < 1e-12);
            CHECK(std::abs(dot(block(b, i), mi)) < 1e-12);
            // m_i x abar_i = -b_i and m_i x a_i = f_i
            const Vec3 r1 = cross(mi, abar(p, m.flat(), i)) + block(b, i);
            const Vec3 r2 = cross(mi, a_ctrl(p, m.flat(), u, i)) - block(f, i);
            CHECK(norm(r1) < 1e-12);
            CHECK(norm(r2) < 1e-12);
        }
    }
}

TEST_CASE("drift special cases") {
    ModelParams p;
    p.d_diag = {{0, 0, 0}};
    p.alpha = 0;
    p.c_ext = 2;
    const SpinConfiguration m(Field{1, 0, 0});
    CHECK(drift_f(p, m, Field{0, 0, 0}) == Field{0, 0, 0});
    CHECK(drift_b(p, m) == Field{0, 0, 0});
    const Vec3 a = a_ctrl(p, m.flat(), Field{0.1, 0.2, 0.3}, 0);
    CHECK(a.x == doctest::Approx(0.2));
    CHECK(a.z == doctest::Approx(0.6));

    // single spin, alpha = 0: f = -m x D m against the explicit formula
    p.d_diag = {{1.5, -2.0, 0.5}};
    const double s = 1 / std::sqrt(2.0);
    const SpinConfiguration mm(Field{s, s, 0});
    const Field f = drift_f(p, mm, Field{0, 0, 0});
    const oracle::V3 mv(s, s, 0);
    const oracle::V3 dm(1.5 * s, -2.0 * s, 0);
    const oracle::V3 want = -mv.cross(dm);
    for (int l = 0; l < 3; ++l) CHECK(f[l] == doctest::Approx(want(l)));

    // Q m parallel to m kills b
    p.d_diag = {{3, 3, 3}};
    p.alpha = 0.5;
    const Field b = drift_b(p, mm);
    CHECK(squared_norm(b) < 1e-28);
    CHECK(abar(p, mm.flat(), 0).x == doctest::Approx(-3 * s));
}

TEST_CASE("lagrangian") {
    ModelParams p;
    p.d_diag = {{0, 0, 0}};
    p.delta = 0;
    p.lambda = 2;
    const Field e1{1, 0, 0};
    CHECK(lagrangian(p, e1, Field{0, 0, 0}, e1) == 0.0);
    CHECK(lagrangian(p, e1, Field{1, 1, 1}, e1) == doctest::Approx(3.0));
    p.delta = 1;
    p.lambda = 0.002;
    CHECK(lagrangian(p, Field{-1, 0, 0}, Field{0, 0, 0}, e1) == doctest::Approx(4.0));
}

TEST_CASE("target profiles") {
    const auto prof = TargetProfile::per_spin(
        {TargetProfile::Constant{{1, 0, 0}}, TargetProfile::RotatingSwitch{}}, 0.5);
    CHECK(prof.n_spins() == 2);
    CHECK(prof.at(0.0).spin(1).x == doctest::Approx(-1));
    CHECK(prof.at(0.25).spin(1).y == doctest::Approx(1));
    CHECK(prof.at(0.5).spin(1).x == doctest::Approx(1));
    const double t = 0.1;
    CHECK(prof.at(t).spin(1).x == doctest::Approx(-std::cos(std::numbers::pi * t / 0.5)));
    CHECK(prof.at(t).spin(0).x == 1.0);

    const auto tab = TargetProfile::tabulated(
        {0.0, 1.0}, {SpinConfiguration(Field{1, 0, 0}), SpinConfiguration(Field{0, 1, 0})});
    const auto mid = tab.at(0.5);
    CHECK(mid.spin(0).x == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(mid.max_norm_defect() < 1e-15);
    CHECK(tab.at(-1.0).spin(0).x == 1.0);
    CHECK(tab.at(2.0).spin(0).y == 1.0);
    CHECK_THROWS(TargetProfile::tabulated({1.0, 0.0}, {SpinConfiguration(Field{1, 0, 0}),
                                                       SpinConfiguration(Field{0, 1, 0})}));
}

TEST_CASE("terminal payoffs") {
    const double beta = 2.0;
    const auto h1 = TerminalPayoff::log_harmonic_1spin();
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = oracle::random_unit_field(gen, 1);
        const double w = std::exp(h1.log_weight(m, beta));
        CHECK(w == doctest::Approx(m[2] + 2));
        CHECK(w >= 1.0 - 1e-15);
        CHECK(w <= 3.0 + 1e-15);
        CHECK(h1.value(m, beta) == doctest::Approx(-std::log(m[2] + 2) / beta));
    }
    const auto h2 = TerminalPayoff::log_harmonic_2spin();
    CHECK(std::exp(h2.log_weight(Field{0, 0, 1, 0, 0, 1}, 1.0)) == doctest::Approx(4.0));

    const auto q = TerminalPayoff::quadratic_tracking(SpinConfiguration(Field{1, 0, 0}));
    CHECK(q.value(Field{-1, 0, 0}, beta) == doctest::Approx(2.0));
    CHECK(q.log_weight(Field{-1, 0, 0}, beta) == doctest::Approx(-4.0));
    CHECK_THROWS(q.value(Field{1, 0, 0, 1, 0, 0}, beta));
}

TEST_CASE("model validation") {
    ModelParams p;
    p.d_diag = {{0, 0, 0}};
    CHECK_NOTHROW(p.validate());
    p.lambda = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.lambda = 1;
    p.horizon = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.horizon = 1;
    p.exchange = ExchangeMatrix::ring(2);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
