#include "catch_amalgamated.hpp"

#include "fes/algorithms.hpp"
#include "fes/random.hpp"
#include "fes/scenarios/lti.hpp"
#include "fes/scenarios/robots.hpp"

#include <cmath>

using namespace fes;
using Catch::Approx;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

EquilibriumProblem identity_problem() {
    EquilibriumProblem p;
    p.input_dim = 1;
    p.F = [](const Vec& u, const Vec&) -> Vec { return u; };
    p.resolvent = identity_resolvent();
    p.strong_monotonicity = 1.0;
    p.lipschitz_F = 1.0;
    return p;
}

scenarios::RobotScenario random_robots(Rng& rng) {
    scenarios::RobotScenario scn;
    for (auto& t : scn.targets) t = Eigen::Vector2d(sample_uniform(rng, -4.0, 9.0), sample_uniform(rng, -5.0, 5.0));
    scn.coupling = sample_uniform(rng, 0.0, 0.6);
    return scn;
}

Vec robot_equilibrium(const scenarios::RobotSetup& s) {
    const Vec w = s.w.value(0.0);
    const auto h = [&](const Vec& u) { return s.plant.steady_output_unchecked(u, w); };
    return solve_offline(s.problem, h, s.oracle_gamma, 1e-12, 1000000, s.u0).u;
}

}  // namespace

TEST_CASE("prox-grad contraction factor examples", "[algorithms]") {
    CHECK(prox_grad_contraction(1.0, 1.0, 1.0) == Approx(0.0).margin(1e-15));
    CHECK(prox_grad_contraction(1.0, 2.0, 0.25) == Approx(std::sqrt(0.75)));
    CHECK(prox_grad_contraction(1.0, 2.0, 1e-12) == Approx(1.0));

    const auto op = prox_grad_operator(identity_problem(), 1.0);
    CHECK(op.c_T == Approx(0.0).margin(1e-15));
    CHECK(op(v1(3.7), v1(0.0))[0] == Approx(0.0).margin(1e-15));
}

TEST_CASE("prox-grad rejects steps outside the admissible interval", "[algorithms]") {
    for (double g : {0.0, -1.0, 2.0, 3.0}) {
        try {
            (void)prox_grad_operator(identity_problem(), g);
            FAIL("expected StepSizeOutOfRange");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::StepSizeOutOfRange);
        }
    }
}

TEST_CASE("best response examples on the robot game", "[algorithms]") {
    scenarios::RobotScenario scn;
    scn.targets = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
    const auto s = scenarios::build_robots(scn);
    const Vec w = s.w.value(0.0);

    // agent 1 at the origin, the others on their targets
    Vec x = Vec::Zero(12);
    for (int i = 1; i < 4; ++i) x.segment<2>(3 * i) = scn.targets[i];
    const Vec T = s.op(Vec::Zero(8), s.plant.output_map(x, w));
    CHECK(T[0] == Approx(1.5 / 3.5));
    CHECK(T[1] == Approx(0.0).margin(1e-15));

    // brute-force minimization of |xi - rbar_1|^2 + 0.25 sum |xi - r_j|^2
    const auto J = [&](double a, double b) {
        const Eigen::Vector2d xi(a, b);
        double v = (xi - scn.targets[0]).squaredNorm();
        for (int j = 1; j < 4; ++j) v += 0.25 * (xi - scn.targets[j]).squaredNorm();
        return v;
    };
    Eigen::Vector2d c(0.0, 0.0);
    for (double h = 0.1; h > 1e-9; h *= 0.5) {
        for (int it = 0; it < 40; ++it) {
            for (const Eigen::Vector2d& d : {Eigen::Vector2d(h, 0), Eigen::Vector2d(-h, 0), Eigen::Vector2d(0, h),
                                            Eigen::Vector2d(0, -h)}) {
                if (J(c.x() + d.x(), c.y() + d.y()) < J(c.x(), c.y())) c += d;
            }
        }
    }
    CHECK((T.head<2>() - c).norm() <= 1e-6);

    // everyone else already at agent 2's target
    Vec x2 = Vec::Zero(12);
    for (int i = 0; i < 4; ++i) x2.segment<2>(3 * i) = scn.targets[1];
    CHECK((s.op(Vec::Zero(8), s.plant.output_map(x2, w)).segment<2>(2) - scn.targets[1]).norm() <= 1e-14);
}

TEST_CASE("best response clamps to the agent box", "[algorithms]") {
    scenarios::RobotScenario scn;
    scn.targets = {{12.0, 0.0}};
    scn.coupling = 0.0;
    const auto s = scenarios::build_robots(scn);
    const Vec T = s.op(Vec::Zero(2), s.plant.output_map(Vec::Zero(3), s.w.value(0.0)));
    CHECK(T[0] == Approx(10.0));
    CHECK(T[1] == Approx(0.0).margin(1e-15));
}

TEST_CASE("relaxed step", "[algorithms]") {
    AlgorithmOperator zero;
    zero.step = [](const Vec& u, const Vec&) -> Vec { return Vec::Zero(u.size()); };
    zero.c_T = 0.0;
    zero.P = Mat::Identity(1, 1);
    CHECK(relaxed_step(zero, 1.0, v1(4.0), v1(0.0))[0] == 0.0);
    CHECK(relaxed_step(zero, 0.5, v1(4.0), v1(0.0))[0] == 2.0);
    CHECK(relaxed_contraction(0.2, 0.5) == Approx(0.6));
    for (double e : {0.0, -0.1, 1.5}) {
        try {
            (void)relaxed_step(zero, e, v1(4.0), v1(0.0));
            FAIL("expected RelaxationOutOfRange");
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::RelaxationOutOfRange);
        }
    }

    // 1-D quadratic with c_T = 0.2: F = u - 3, gamma chosen so that 1 - gamma = 0.2
    EquilibriumProblem p;
    p.input_dim = 1;
    p.F = [](const Vec& u, const Vec&) -> Vec { return u - Vec::Constant(1, 3.0); };
    p.resolvent = identity_resolvent();
    p.strong_monotonicity = 1.0;
    p.lipschitz_F = 1.0;
    const auto op = prox_grad_operator(p, 0.8);
    CHECK(op.c_T == Approx(0.2));
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const Vec u = v1(sample_uniform(rng, -10.0, 10.0));
        const double after = std::abs(relaxed_step(op, 0.5, u, u)[0] - 3.0);
        CHECK(after <= 0.6 * std::abs(u[0] - 3.0) + 1e-12);
    }
}

TEST_CASE("prox-grad contracts at rate c_T on random instances", "[algorithms][property]") {
    Rng rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        const auto [sys, cost] = scenarios::random_lti(rng);
        const auto plant = scenarios::lti_plant(sys);
        const auto prob = scenarios::lti_fo_problem(sys, cost);
        const double m = prob.strong_monotonicity, l = prob.lipschitz_F;
        const double gamma = sample_uniform(rng, 0.1, 1.9) * m / (l * l);
        const auto op = prox_grad_operator(prob, gamma);
        const Vec w = sample_box(sys.disturbance_box, rng);
        const auto h = [&](const Vec& u) { return plant.steady_output_unchecked(u, w); };
        const Vec us = solve_offline(prob, h, gamma, 1e-12, 5000000, Vec::Zero(sys.n_u())).u;

        const Vec u = sample_box(sys.input_box, rng);
        const double eps = sample_uniform(rng, 0.05, 1.0);
        const double before = (u - us).norm();
        CHECK((op(u, h(u)) - us).norm() <= op.c_T * before + 1e-9);
        CHECK((relaxed_step(op, eps, u, h(u)) - us).norm() <= relaxed_contraction(op.c_T, eps) * before + 1e-9);
        CHECK((op(us, h(us)) - us).norm() <= 1e-9);

        const Vec y2 = h(u) + sample_normal(sys.n_y(), rng);
        CHECK((op(u, h(u)) - op(u, y2)).norm() <= op.ell_T * (h(u) - y2).norm() + 1e-9);
    }
}

TEST_CASE("best response contracts at rate c_T on random robot games", "[algorithms][property]") {
    Rng rng(12);
    for (int trial = 0; trial < 500; ++trial) {
        const auto scn = random_robots(rng);
        const auto s = scenarios::build_robots(scn);
        const Vec w = s.w.value(0.0);
        const auto h = [&](const Vec& u) { return s.plant.steady_output_unchecked(u, w); };
        const Vec us = robot_equilibrium(s);

        const Vec u = sample_box(s.plant.input_set, rng);
        const double eps = sample_uniform(rng, 0.05, 1.0);
        const double before = (u - us).norm();
        CHECK((s.op(u, h(u)) - us).norm() <= s.op.c_T * before + 1e-9);
        CHECK((relaxed_step(s.op, eps, u, h(u)) - us).norm() <= relaxed_contraction(s.op.c_T, eps) * before + 1e-9);
        CHECK((s.op(us, h(us)) - us).norm() <= 1e-9);

        const Vec y2 = h(u) + sample_normal(s.plant.output_dim, rng);
        CHECK((s.op(u, h(u)) - s.op(u, y2)).norm() <= s.op.ell_T * (h(u) - y2).norm() + 1e-9);
    }
}

TEST_CASE("best response and prox-grad agree on the robot equilibrium", "[algorithms]") {
    Rng rng(40);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = scenarios::build_robots(random_robots(rng));
        const Vec w = s.w.value(0.0);
        Vec u = sample_box(s.plant.input_set, rng);
        for (int it = 0; it < 500; ++it) u = s.op(u, s.plant.steady_output_unchecked(u, w));
        CHECK((u - robot_equilibrium(s)).norm() <= 1e-6);
    }
}

TEST_CASE("projected gradient argmin", "[algorithms]") {
    const BoxSet box = BoxSet::uniform(2, -1.0, 1.0);
    const Vec target(Eigen::Vector2d(3.0, 0.25));
    const auto grad = [&](const Vec& x) -> Vec { return 2.0 * (x - target); };
    const Vec x = projected_gradient_argmin(grad, box, 2.0, Vec::Zero(2));
    CHECK(x[0] == Approx(1.0));
    CHECK(x[1] == Approx(0.25));
    CHECK_THROWS_AS(projected_gradient_argmin(grad, box, 1e6, Vec::Zero(2), 1e-14, 3), Error);
}
