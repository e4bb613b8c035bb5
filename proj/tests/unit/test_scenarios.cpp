#include "catch_amalgamated.hpp"

#include "fes/random.hpp"
#include "fes/scenarios/building.hpp"
#include "fes/scenarios/lti.hpp"
#include "fes/scenarios/occupancy.hpp"
#include "fes/scenarios/robots.hpp"
#include "fes/simulator.hpp"

#include <cmath>
#include <numbers>

using namespace fes;
using namespace fes::scenarios;
using Catch::Approx;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

Vec building_w(const BuildingScenario& scn, double solar, double amb, double ground) {
    Vec w = Vec::Zero(scn.n_w());
    w[0] = solar;
    w[1] = amb;
    w[2] = ground;
    return w;
}

ClosedLoopConfig day_config(const BuildingSetup& b, const BuildingScenario& scn) {
    ClosedLoopConfig cfg;
    cfg.tau = scn.tau;
    cfg.eps = scn.eps;
    cfg.horizon = scn.horizon_samples();
    cfg.substeps = 20;
    cfg.u0 = b.u0;
    cfg.x0 = b.x0;
    return cfg;
}

}  // namespace

TEST_CASE("uniform boundary temperatures give a uniform steady state", "[scenarios][building]") {
    const BuildingScenario scn;
    const auto b = build_building(scn);
    for (double T : {-5.0, 12.0, 30.0}) {
        const Vec xs = b.plant.steady_state(Vec::Zero(scn.n_u()), building_w(scn, 0.0, T, T));
        CHECK((xs.array() - T).abs().maxCoeff() <= 1e-9);
    }
    CHECK(max_steady_state_residual(b.plant, 200, 3) <= 1e-8);
}

TEST_CASE("one-room toy has an affine pseudo-gradient with a closed-form optimum", "[scenarios][building]") {
    // C x' = (T_amb - x)/Rth + u,  y = x
    const double C = 5.0, Rth = 0.5, T_amb = 10.0;
    LtiSystem sys;
    sys.cap = v1(C);
    sys.L = Mat::Constant(1, 1, 1.0 / Rth);
    sys.B = Mat::Constant(1, 1, 1.0);
    sys.E = Mat::Constant(1, 1, 1.0 / Rth);
    sys.Cout = Mat::Identity(1, 1);
    sys.input_box = BoxSet::uniform(1, -100.0, 100.0);
    sys.disturbance_box = BoxSet::uniform(1, -20.0, 40.0);
    const double H = 0.3, y_ref = 21.0;
    const QuadraticCost cost{Mat::Constant(1, 1, H), v1(0.0), Mat::Identity(1, 1), v1(y_ref)};
    const auto s = build_lti_scenario(sys, cost);

    // h(u) = T_amb + Rth u,  F~(u) = H u + Rth (T_amb + Rth u - y_ref)
    const auto h = [&](const Vec& u) { return s.plant.steady_output_unchecked(u, v1(T_amb)); };
    for (double u : {-3.0, 0.0, 7.0}) {
        CHECK(h(v1(u))[0] == Approx(T_amb + Rth * u));
        CHECK(s.problem.F(v1(u), h(v1(u)))[0] == Approx(H * u + Rth * (T_amb + Rth * u - y_ref)));
    }
    const double u_star = Rth * (y_ref - T_amb) / (H + Rth * Rth);
    const auto sol = solve_offline(s.problem, h, s.step_gamma, 1e-13, 100000, v1(0.0));
    CHECK(sol.u[0] == Approx(u_star).epsilon(1e-10));
}

TEST_CASE("shipped building dimensions, band and thermostat thresholds", "[scenarios][building]") {
    const BuildingScenario scn;
    CHECK(scn.comfort_min == 20.0);
    CHECK(scn.comfort_max == 25.0);
    CHECK(scn.n_u() == 8);
    CHECK(scn.n_y() == 7);
    CHECK(scn.tau == 0.05);
    CHECK(scn.eps == 1.0);
    const auto b = build_building(scn);
    CHECK(b.plant.input_dim == 8);
    CHECK(b.plant.output_dim == 7);

    const auto policy = thermostat_policy(scn);
    const Vec x = Vec::Zero(scn.n_x());
    // inside each hysteresis band the previous state is kept
    Vec y = Vec::Constant(7, 22.0);
    for (double prior : {0.0, 1.0}) {
        const Vec u = policy(1, 0.0, x, y, Vec::Constant(8, prior));
        for (int i = 0; i < 5; ++i) CHECK(u[i] == prior);
        CHECK(u[6] == prior);
        CHECK(u[7] == 0.0);
    }
    y.head(5).setConstant(23.0);
    for (double prior : {0.0, 1.0}) {
        const Vec u = policy(1, 0.0, x, y, Vec::Constant(8, prior));
        CHECK(u.head(5).isZero());
        CHECK(u[6] == 0.0);
        CHECK(u[7] == prior);
    }
    y.head(5).setConstant(22.5);
    const Vec mid = policy(1, 0.0, x, y, Vec::Ones(8));
    CHECK(mid.head(5).isZero());
    CHECK(mid[6] == 0.0);
    CHECK(mid[7] == 0.0);
    y.head(5).setConstant(15.0);
    const Vec cold = policy(1, 0.0, x, y, Vec::Zero(8));
    CHECK(cold.head(5).isApprox(Vec::Ones(5)));
    CHECK(cold[6] == 1.0);
    CHECK(cold[7] == 0.0);
    y.head(5).setConstant(24.6);
    const Vec hot = policy(1, 0.0, x, y, Vec::Zero(8));
    CHECK(hot.head(5).isZero());
    CHECK(hot[6] == 0.0);
    CHECK(hot[7] == 1.0);
}

TEST_CASE("building network is connected and stable for every air flow", "[scenarios][building]") {
    const BuildingScenario scn;
    const auto m = building_model(scn);
    CHECK((m.cap.array() > 0.0).all());
    // connectivity: the off-diagonal coupling graph of L0 reaches every node
    const int n = static_cast<int>(m.L0.rows());
    std::vector<int> seen{0};
    std::vector<bool> mark(n, false);
    mark[0] = true;
    for (std::size_t i = 0; i < seen.size(); ++i) {
        for (int j = 0; j < n; ++j) {
            if (!mark[j] && m.L0(seen[i], j) != 0.0) {
                mark[j] = true;
                seen.push_back(j);
            }
        }
    }
    CHECK(static_cast<int>(seen.size()) == n);
    for (int a = 0; a <= 10; ++a) {
        const double s = a / 10.0;
        const Mat L = m.L0 + s * m.k_air * Mat(m.room_mask.asDiagonal());
        const Mat A = -(m.cap.cwiseInverse().asDiagonal() * L);
        CHECK(A.eigenvalues().real().maxCoeff() < 0.0);
    }
}

TEST_CASE("building certificate passes the lyapunov probe", "[scenarios][building]") {
    const BuildingScenario scn;
    const auto b = build_building(scn);
    LyapunovProbeOptions opt;
    opt.trials = 100;
    opt.duration = 6.0;
    opt.state_spread = 3.0;
    const auto rep = probe_lyapunov_decay(b.plant, b.cert, b.V, b.w, opt);
    CHECK(rep.samples == 100 * 51);
    CHECK(rep.violations == 0);
}

TEST_CASE("building day under feedback optimization", "[scenarios][building]") {
    const BuildingScenario scn;
    const auto b = build_building(scn);
    const auto log = run_sampled_data(b.plant, b.op, b.w, day_config(b, scn));
    REQUIRE(log.samples.size() == 481);
    for (const auto& r : log.samples) {
        CHECK(r.x.allFinite());
        CHECK(b.plant.input_set.contains(r.u));
    }
    const auto rep = check_lemma1(log, b.bundle, b.V);
    CHECK(rep.checked == 480);
    CHECK(rep.violations == 0);

    const auto thermo = thermostat_baseline(b, scn, scn.horizon_samples(), scn.tau);
    const auto fo = evaluate_building(log, scn);
    const auto th = evaluate_building(thermo, scn);
    CHECK(fo.total_cost < th.total_cost);
    CHECK(fo.violation_hours < th.violation_hours);
}

TEST_CASE("a quiet day keeps both controllers in the band", "[scenarios][building]") {
    BuildingScenario scn;
    scn.solar_peak = 0.0;
    scn.occupants = 0;
    scn.ambient_mean = 22.5;
    scn.ambient_amplitude = 0.0;
    scn.ground_temperature = 22.5;
    scn.initial_temperature = 22.0;
    const auto b = build_building(scn);
    const auto fo = evaluate_building(run_sampled_data(b.plant, b.op, b.w, day_config(b, scn)), scn);
    const auto th = evaluate_building(thermostat_baseline(b, scn, scn.horizon_samples(), scn.tau), scn);
    CHECK(fo.violation_hours == 0.0);
    CHECK(th.violation_hours == 0.0);
}

TEST_CASE("feedback rejects hidden gains better than feedforward", "[scenarios][building]") {
    const BuildingScenario scn;
    const auto b = build_building(scn);
    const auto oracle = make_offline_oracle(b.plant, b.problem, b.step_gamma);
    Instrumentation instr;
    instr.oracle = oracle;
    const auto cfg = day_config(b, scn);
    const auto fo = run_sampled_data(b.plant, b.op, b.w, cfg, instr);
    const auto ff = run_feedforward_baseline(b.plant, oracle, b.w_measured, b.w, cfg, instr);
    // compare while the unmeasured solar gain is on
    double fo_err = 0.0, ff_err = 0.0;
    for (std::size_t k = 0; k < fo.samples.size(); ++k) {
        if (b.w.value(fo.samples[k].t)[0] <= 0.0) continue;
        fo_err = std::max(fo_err, fo.samples[k].dy.norm());
        ff_err = std::max(ff_err, ff.samples[k].dy.norm());
    }
    CHECK(fo_err < ff_err);
}

TEST_CASE("occupancy process", "[scenarios][occupancy]") {
    const WorkdaySchedule sch;
    const auto none = occupancy_process(5, 0, sch, 3);
    for (double t = 0.0; t < 24.0; t += 0.1) CHECK(none.value(t).isZero());

    const auto r = sample_occupancy(5, 15, sch, 1.0, 42, 100.0, 0.05);
    const auto sig = occupancy_signal(r);
    for (double t = sch.lunch_start + 0.05 + 1e-9; t < sch.lunch_end; t += 0.01) CHECK(sig.value(t).isZero());
    for (double t = 0.0; t < sch.arrive; t += 0.25) CHECK(sig.value(t).isZero());

    // trapezoid rule is exact for the piecewise-linear signal on a grid through every breakpoint
    const int per_hour = 12 * 60;
    const double h = 1.0 / per_hour;
    double integral = 0.0;
    Vec prev = sig.value(0.0);
    for (int i = 1; i <= 24 * per_hour; ++i) {
        const Vec cur = sig.value(i * h);
        integral += 0.5 * h * (prev.sum() + cur.sum());
        prev = cur;
    }
    CHECK(integral == Approx(100.0 * r.occupant_hours()).epsilon(1e-6));
    CHECK(r.occupant_hours() > 0.0);
    CHECK(r.occupant_hours() <= 15.0 * (sch.leave - sch.arrive - (sch.lunch_end - sch.lunch_start)) + 1e-9);

    // exact rate bound dominates dense differencing
    for (double t0 = 7.5; t0 < 17.0; t0 += 0.05) {
        double fd = 0.0;
        for (int i = 0; i < 50; ++i) {
            const double a = t0 + 0.05 * i / 50.0, c = a + 0.001;
            fd = std::max(fd, (sig.value(c) - sig.value(a)).norm() / 0.001);
        }
        CHECK(fd <= sig.rate_bound(t0, t0 + 0.051) * (1.0 + 1e-9) + 1e-6);
    }

    const auto again = sample_occupancy(5, 15, sch, 1.0, 42, 100.0, 0.05);
    CHECK(again.location == r.location);
}

TEST_CASE("unicycle inner loop", "[scenarios][robots]") {
    RobotScenario scn;
    scn.targets = {{1.0, 2.0}};
    scn.coupling = 0.0;
    const auto s = build_robots(scn);
    const auto w = s.w;
    const Vec u(Eigen::Vector2d(1.0, 2.0));

    // at the command with the rest heading nothing moves
    const Vec rest = s.plant.steady_state(u, w.value(0.0));
    CHECK(s.plant.dynamics(rest, u, w.value(0.0)).norm() <= 1e-15);
    CHECK((integrate_hold(s.plant, rest, u, w, 0.0, 5.0, 100) - rest).norm() <= 1e-12);

    // from elsewhere the position and heading errors vanish
    for (const auto& start : {Eigen::Vector3d(-3.0, -1.0, 0.3), Eigen::Vector3d(4.0, 5.0, -2.0)}) {
        Vec x = start;
        x = integrate_hold(s.plant, x, u, w, 0.0, 40.0, 4000);
        CHECK((x.head<2>() - u).norm() <= 1e-3);
    }
    Vec x(Eigen::Vector3d(-3.0, -1.0, 2.5));
    double first = std::abs(heading_error(x[0], x[1], x[2], u));
    x = integrate_hold(s.plant, x, u, w, 0.0, 10.0, 1000);
    const double later = std::abs(heading_error(x[0], x[1], x[2], u));
    CHECK(later < 1e-2 * first);
}

TEST_CASE("robot equilibrium differs from the targets under coupling", "[scenarios][robots]") {
    const RobotScenario scn;
    const Vec ne = robot_unconstrained_ne(scn);
    Vec rbar(8);
    for (int i = 0; i < 4; ++i) rbar.segment<2>(2 * i) = scn.targets[i];
    CHECK((ne - 0.5 * rbar).norm() <= 1e-14);
    CHECK((ne - rbar).norm() > 0.0);
    const auto s = build_robots(scn);
    CHECK(s.plant.input_set.contains(ne));

    RobotScenario single;
    single.targets = {{12.0, -7.0}};
    single.coupling = 0.0;
    const auto one = build_robots(single);
    const Vec w = one.w.value(0.0);
    const auto h = [&](const Vec& u) { return one.plant.steady_output_unchecked(u, w); };
    const auto sol = solve_offline(one.problem, h, one.oracle_gamma, 1e-12, 100000, Vec::Zero(2));
    CHECK(sol.u[0] == Approx(10.0));
    CHECK(sol.u[1] == Approx(-6.0));
}
