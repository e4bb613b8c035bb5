#include "catch_amalgamated.hpp"

#include "fes/random.hpp"
#include "fes/scenarios/lti.hpp"
#include "fes/scenarios/robots.hpp"
#include "fes/simulator.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

using namespace fes;
using Catch::Approx;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

// Scalar plant x' = -a x + b u + e w with quadratic cost; box [lo, hi].
scenarios::LtiScenario scalar_scenario(double lo = -50.0, double hi = 50.0) {
    auto sys = scenarios::scalar_lti(-0.8, 1.0, 1.0, 1.0, lo, hi);
    scenarios::QuadraticCost c;
    c.H = Mat::Constant(1, 1, 0.5);
    c.q = v1(0.2);
    c.R = Mat::Identity(1, 1);
    c.y_ref = v1(2.0);
    // m = ell here, so m / ell^2 would converge in one step; a shorter step keeps c_T away from 0
    return scenarios::build_lti_scenario(sys, c, 0.3);
}

ClosedLoopConfig loop(double tau, double eps, long horizon, const Vec& u0, const Vec& x0, int substeps = 20) {
    ClosedLoopConfig cfg;
    cfg.tau = tau;
    cfg.eps = eps;
    cfg.horizon = horizon;
    cfg.substeps = substeps;
    cfg.u0 = u0;
    cfg.x0 = x0;
    return cfg;
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string line; std::getline(is, line);) out.push_back(line);
    return out;
}

long count_fields(const std::string& line) { return 1 + static_cast<long>(std::count(line.begin(), line.end(), ',')); }

}  // namespace

TEST_CASE("a static plant turns the loop into the offline iteration", "[simulator]") {
    const auto s = scalar_scenario();
    const Vec w = v1(0.3);
    const auto sig = DisturbanceSignal::constant(w);
    const DiscreteStepFn psi = [&](const Vec&, const Vec& u, const DisturbanceSignal& ws, long k) {
        return s.plant.steady_state(u, ws.value((k + 1) * 0.1));
    };
    const Vec u0 = v1(-3.0);
    const auto log = run_discrete(s.plant, psi, s.op, sig, loop(0.1, 1.0, 30, u0, s.plant.steady_state(u0, w)));

    std::vector<Vec> iterates;
    const auto h = [&](const Vec& u) { return s.plant.steady_output_unchecked(u, w); };
    try {
        (void)solve_offline(s.problem, h, s.step_gamma, 0.0, 30, u0, [&](const Vec& u) { iterates.push_back(u); });
    } catch (const Error&) {
        // tolerance 0 never converges; only the first 30 iterates are needed
    }
    REQUIRE(iterates.size() == 30);
    for (long k = 1; k <= 30; ++k) CHECK(log.samples[k].u[0] == iterates[k - 1][0]);
}

TEST_CASE("geometric contraction on a static identity plant", "[simulator]") {
    PlantModel p;
    p.state_dim = p.input_dim = p.disturbance_dim = p.output_dim = 1;
    p.dynamics = [](const Vec& x, const Vec& u, const Vec&) -> Vec { return u - x; };
    p.output_map = [](const Vec& x, const Vec&) -> Vec { return x; };
    p.steady_state = [](const Vec& u, const Vec&) -> Vec { return u; };
    p.input_set = BoxSet::unbounded(1);
    p.disturbance_set = BoxSet::uniform(1, -1.0, 1.0);
    AlgorithmOperator half;
    half.step = [](const Vec&, const Vec& y) -> Vec { return 0.5 * y; };
    half.c_T = 0.5;
    half.P = Mat::Identity(1, 1);
    const DiscreteStepFn psi = [](const Vec&, const Vec& u, const DisturbanceSignal&, long) { return u; };
    const auto log =
        run_discrete(p, psi, half, DisturbanceSignal::constant(v1(0.0)), loop(1.0, 1.0, 40, v1(8.0), v1(8.0)));
    for (const auto& s : log.samples) CHECK(s.u[0] == std::ldexp(8.0, -static_cast<int>(s.k)));
}

TEST_CASE("starting at the equilibrium stays there", "[simulator]") {
    Rng rng(6);
    for (int i = 0; i < 10; ++i) {
        const auto [sys, cost] = scenarios::random_lti(rng);
        const auto s = scenarios::build_lti_scenario(sys, cost);
        const Vec w = sample_box(sys.disturbance_box, rng);
        const auto oracle = make_offline_oracle(s.plant, s.problem, s.step_gamma, 1e-13, 5000000);
        const Vec us = oracle(w, Vec());
        Instrumentation instr;
        instr.oracle = oracle;
        const auto log = run_sampled_data(s.plant, s.op, DisturbanceSignal::constant(w),
                                          loop(0.5, 0.7, 20, us, s.plant.steady_state(us, w)), instr);
        for (const auto& r : log.samples) {
            CHECK(r.du.norm() <= 1e-8);
            CHECK(r.dx.norm() <= 1e-8);
        }
    }
}

TEST_CASE("sampled-data and discrete loops coincide for the rk4 map", "[simulator]") {
    Rng rng(13);
    const auto inst = scenarios::random_certified_lti(rng);
    const auto& s = inst.scenario;
    const auto cfg = loop(inst.tau, inst.eps, 50, inst.u0, inst.x0);
    const auto a = run_sampled_data(s.plant, s.op, inst.w, cfg);
    const auto b = run_discrete(s.plant, rk4_step(s.plant, cfg.tau, cfg.substeps), s.op, inst.w, cfg);
    CHECK(a.to_csv() == b.to_csv());
}

TEST_CASE("exact discretization agrees with fine rk4", "[simulator]") {
    const auto s = scalar_scenario();
    const double tau = 0.4;
    const auto w = DisturbanceSignal::constant(v1(1.5));
    const auto cfg = loop(tau, 0.8, 60, v1(4.0), v1(-2.0), 100);
    const auto rk = run_sampled_data(s.plant, s.op, w, cfg);
    const auto ex = run_discrete(s.plant, scenarios::lti_exact_step(s.sys, tau), s.op, w, cfg);

    // independent closed form for the scalar map
    const double a = 0.8, Ad = std::exp(-a * tau);
    double x = -2.0;
    double u = 4.0;
    for (long k = 1; k <= 60; ++k) {
        const double xss = (u + 1.5) / a;
        x = xss + Ad * (x - xss);
        CHECK(ex.samples[k].x[0] == Approx(x).epsilon(1e-12));
        CHECK(std::abs(rk.samples[k].u[0] - ex.samples[k].u[0]) <= 1e-6);
        u = ex.samples[k].u[0];
    }
}

TEST_CASE("one-step lyapunov recursion on the scalar plant", "[simulator]") {
    const auto s = scalar_scenario();
    const double tau = 0.3;
    const Vec u = v1(1.0);
    const AlgorithmOperator exact_hold{[&](const Vec&, const Vec&) -> Vec { return u; }, 0.0, 0.0, Mat::Identity(1, 1)};

    // with w frozen, V = (x - x_ss)^2 decays exactly at rate 2a
    auto b = s.bundle;
    b.mu = 2.0 * 0.8;
    const auto w = DisturbanceSignal::constant(v1(0.5));
    const auto exact =
        run_discrete(s.plant, scenarios::lti_exact_step(s.sys, tau),
                     exact_hold, w, loop(tau, 1.0, 40, u, v1(7.0)));
    const auto rep = check_lemma1(exact, b, s.V, 1e-12);
    CHECK(rep.checked == 40);
    CHECK(rep.violations == 0);
    CHECK(std::abs(rep.worst_margin) <= 1e-12);

    const auto at_rest = run_discrete(s.plant, scenarios::lti_exact_step(s.sys, tau), exact_hold, w,
                                      loop(tau, 1.0, 40, u, s.plant.steady_state(u, v1(0.5))));
    const auto rest = check_lemma1(at_rest, b, s.V, 0.0);
    CHECK(rest.violations == 0);
    CHECK(rest.worst_margin >= 0.0);

    // time-varying w with the shipped certificate constants
    const auto ws = DisturbanceSignal::sinusoid(v1(0.0), v1(2.0), v1(1.3), v1(0.2));
    const auto moving = run_sampled_data(s.plant, s.op, ws, loop(tau, 0.5, 200, u, v1(-4.0)));
    const auto rep2 = check_lemma1(moving, s.bundle, s.V);
    CHECK(rep2.violations == 0);
    CHECK(rep2.worst_margin >= 0.0);
}

TEST_CASE("iss envelope dominates certified runs with constant disturbance", "[simulator]") {
    const auto s = scalar_scenario();
    const double tau = 1.0;
    const double eps = 0.5 * std::min(1.0, eps_max(s.bundle, tau));
    REQUIRE(certify(s.bundle, tau, eps).certified());
    Instrumentation instr;
    instr.oracle = make_offline_oracle(s.plant, s.problem, s.step_gamma);
    instr.bundle = &s.bundle;
    const auto log =
        run_sampled_data(s.plant, s.op, DisturbanceSignal::constant(v1(0.7)), loop(tau, eps, 200, v1(-20.0), v1(5.0)), instr);
    const auto rep = check_iss(log, s.bundle, tau, eps);
    CHECK(rep.envelope_violations == 0);
    CHECK(rep.ok());
    CHECK(log.samples.back().envelope < log.samples.front().envelope);
    CHECK(log.samples.back().du.norm() < 1e-3 * log.samples.front().du.norm());
    CHECK_THROWS_AS(check_iss(log, s.bundle, tau, 1.0 + 1e-9), Error);
}

TEST_CASE("robot loop reaches the equilibrium", "[simulator]") {
    const scenarios::RobotScenario scn;
    const auto s = scenarios::build_robots(scn);
    Instrumentation instr;
    instr.oracle = make_offline_oracle(s.plant, s.problem, s.oracle_gamma);
    const auto log = run_sampled_data(s.plant, s.op, s.w, loop(0.5, 1.0, 60, s.u0, s.x0, 50), instr);
    CHECK(log.samples.back().du.norm() <= 1e-3);
    CHECK((log.samples.back().u - scenarios::robot_unconstrained_ne(scn)).norm() <= 1e-3);
}

TEST_CASE("inputs are held and stay feasible", "[simulator]") {
    const auto s = scalar_scenario(-1.0, 1.0);
    auto cfg = loop(0.5, 1.0, 30, v1(0.0), v1(0.0), 10);
    cfg.log_intersample = true;
    const auto log = run_sampled_data(s.plant, s.op, DisturbanceSignal::sinusoid(v1(0.0), v1(3.0), v1(0.5), v1(0.0)), cfg);
    REQUIRE(log.dense.size() == 30 * 9);
    bool saturated = false;
    for (const auto& r : log.samples) {
        CHECK(s.sys.input_box.contains(r.u));
        saturated = saturated || std::abs(r.u[0]) == 1.0;
    }
    CHECK(saturated);
    for (const auto& d : log.dense) {
        const long k = static_cast<long>(std::floor(d.t / 0.5 + 1e-9));
        CHECK(d.u[0] == log.samples[k].u[0]);
    }
}

TEST_CASE("feedforward is biased by unmeasured disturbances while feedback is not", "[simulator]") {
    scenarios::LtiSystem sys;
    sys.cap = Vec::Ones(2);
    sys.L = Mat{{2.0, -1.0}, {-1.0, 2.0}};
    sys.B = Mat::Identity(2, 2);
    sys.E = Mat{{1.0, 0.0}, {0.0, 1.0}};
    sys.Cout = Mat::Identity(2, 2);
    sys.input_box = BoxSet::uniform(2, -100.0, 100.0);
    sys.disturbance_box = BoxSet::uniform(2, -10.0, 10.0);
    scenarios::QuadraticCost c{Mat::Identity(2, 2) * 0.1, Vec::Zero(2), Mat::Identity(2, 2), Vec::Constant(2, 3.0)};
    const auto s = scenarios::build_lti_scenario(sys, c);

    const Vec w_true(Eigen::Vector2d(1.0, 2.0));
    const Vec w_meas(Eigen::Vector2d(1.0, 0.0));
    const auto oracle = make_offline_oracle(s.plant, s.problem, s.step_gamma);
    Instrumentation instr;
    instr.oracle = oracle;
    const auto cfg = loop(0.5, 1.0, 300, Vec::Zero(2), Vec::Zero(2));
    const auto fes = run_sampled_data(s.plant, s.op, DisturbanceSignal::constant(w_true), cfg, instr);
    const auto ff = run_feedforward_baseline(s.plant, oracle, DisturbanceSignal::constant(w_meas),
                                             DisturbanceSignal::constant(w_true), cfg, instr);
    const double fes_tail = fes.samples.back().dy.norm();
    const double ff_tail = ff.samples.back().dy.norm();
    CHECK(fes_tail < 1e-4);
    CHECK(ff_tail > 0.1);

    // with exact measurement, feedforward hits the equilibrium input at every sample
    const auto exact = run_feedforward_baseline(s.plant, oracle, DisturbanceSignal::constant(w_true),
                                                DisturbanceSignal::constant(w_true), cfg, instr);
    for (std::size_t k = 1; k < exact.samples.size(); ++k) CHECK(exact.samples[k].du.norm() <= 1e-9);
}

TEST_CASE("divergence carries the sample index", "[simulator]") {
    const auto s = scalar_scenario();
    const DiscreteStepFn psi = [](const Vec& x, const Vec&, const DisturbanceSignal&, long) -> Vec {
        return x * 1e100;
    };
    try {
        (void)run_discrete(s.plant, psi, s.op, DisturbanceSignal::constant(v1(0.0)), loop(0.1, 1.0, 50, v1(0.0), v1(1.0)));
        FAIL("expected IntegrationDiverged");
    } catch (const IntegrationDiverged& e) {
        CHECK(e.sample() == 4);
        CHECK(e.code() == ErrorCode::IntegrationDiverged);
    }
}

TEST_CASE("trajectory csv layout and determinism", "[simulator]") {
    const auto s = scalar_scenario();
    Instrumentation instr;
    instr.oracle = make_offline_oracle(s.plant, s.problem, s.step_gamma);
    instr.lyapunov = s.V;
    instr.bundle = &s.bundle;
    auto cfg = loop(1.0, 0.3, 12, v1(0.0), v1(1.0), 4);
    cfg.log_intersample = true;
    const auto w = DisturbanceSignal::sinusoid(v1(0.0), v1(1.0), v1(0.2), v1(0.0));
    const std::string a = run_sampled_data(s.plant, s.op, w, cfg, instr).to_csv();
    const std::string b = run_sampled_data(s.plant, s.op, w, cfg, instr).to_csv();
    CHECK(a == b);
    REQUIRE_FALSE(a.empty());
    CHECK(a.back() == '\n');

    const auto lines = split_lines(a);
    CHECK(lines.front() == "t,k,x_0,u_0,y_0,w_0,du_norm,dx_norm,dy_norm,W,envelope,z");
    CHECK(lines.size() == 1 + 13 + 12 * 3);
    long dense = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        CHECK(count_fields(lines[i]) == 12);
        const auto c1 = lines[i].find(',');
        if (lines[i].substr(c1 + 1, lines[i].find(',', c1 + 1) - c1 - 1) == "-1") ++dense;
    }
    CHECK(dense == 36);
}
