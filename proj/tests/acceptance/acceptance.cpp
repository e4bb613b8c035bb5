// One line per acceptance criterion; the exit code is the number of failures.

#include "fes/app/commands.hpp"
#include "fes/app/config.hpp"
#include "fes/certificates.hpp"
#include "fes/random.hpp"
#include "fes/scenarios/building.hpp"
#include "fes/scenarios/lti.hpp"
#include "fes/scenarios/robots.hpp"
#include "fes/simulator.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace fes;
using namespace fes::scenarios;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string config_path(const char* name) { return std::string(FES_CONFIG_DIR) + "/" + name; }

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("fes_acceptance_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(FES_LAB_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

CertificateBundle random_bundle(Rng& rng) {
    CertificateBundle b;
    b.mu = std::exp(sample_uniform(rng, std::log(0.05), std::log(5.0)));
    b.alpha1 = sample_uniform(rng, 0.2, 3.0);
    b.alpha2 = b.alpha1 * std::exp(sample_uniform(rng, 0.0, 3.0));
    b.ell_g = sample_uniform(rng, 0.05, 3.0);
    b.ell_x = sample_uniform(rng, 0.05, 3.0);
    const double k = sample_uniform(rng, 0.1, 5.0);
    b.sigma_c = [k](double z) { return k * z * z; };
    b.ell_u_star = sample_uniform(rng, 0.0, 2.0);
    b.c_T = sample_uniform(rng, 0.0, 0.99);
    b.ell_T = sample_uniform(rng, 0.0, 3.0);
    b.lambda_min_P = sample_uniform(rng, 0.3, 1.5);
    b.lambda_max_P = b.lambda_min_P * sample_uniform(rng, 1.0, 4.0);
    return b;
}

// Every certified (tau, eps) gives rho(M) < 1, and the region is not vacuous.
Outcome small_gain_region() {
    const auto t0 = Clock::now();
    Rng rng(2024);
    long inside = 0, bad = 0, unstable_outside = 0;
    while (inside < 10000) {
        const auto b = random_bundle(rng);
        const double tmin = tau_min(b);
        const double tau = tmin + std::exp(sample_uniform(rng, std::log(1e-3), std::log(10.0))) / b.mu;
        const double eps = std::min(eps_max(b, tau), 1.0) * sample_uniform(rng, 1e-3, 1.0);
        if (eps <= 0.0 || !certify(b, tau, eps).certified()) continue;
        ++inside;
        if (!(spectral_radius_2x2(build_M(b, tau, eps)) < 1.0)) ++bad;
        if (tmin > 0.0 && spectral_radius_2x2(build_M(b, 0.5 * tmin, 1.0)) >= 1.0) ++unstable_outside;
    }
    const double secs = seconds_since(t0);
    return {bad == 0 && unstable_outside > 0 && secs < 5.0,
            std::to_string(inside) + " certified points, " + std::to_string(bad) + " with rho >= 1, " +
                std::to_string(unstable_outside) + " unstable outside, " + fmt("%.2f s", secs)};
}

double p_norm(const Mat& P, const Vec& d) { return std::sqrt(d.dot(P * d)); }

// The prox-gradient map contracts toward u* at rate c_T.
Outcome prox_grad_contraction_rate() {
    const auto t0 = Clock::now();
    Rng rng(11);
    RandomLtiOptions opt;
    opt.max_inputs = 10;
    opt.max_states = 6;
    opt.box_half_width = 1e6;
    int checked = 0, bad = 0, box_active = 0;
    double worst = -1.0;
    for (int i = 0; i < 500; ++i) {
        const auto [sys, cost] = random_lti(rng, opt);
        const auto s = build_lti_scenario(sys, cost);
        const Vec w = sample_box(sys.disturbance_box, rng);
        const Vec u_star = lti_unconstrained_optimum(sys, cost, w);
        if (!sys.input_box.contains(u_star)) {
            ++box_active;
            continue;
        }
        const auto T = [&](const Vec& u) { return s.op(u, s.plant.steady_output_unchecked(u, w)); };
        for (int j = 0; j < 4; ++j) {
            const Vec u = u_star + sample_normal(sys.n_u(), rng, std::pow(10.0, j - 1));
            const double before = p_norm(s.op.P, u - u_star);
            const double after = p_norm(s.op.P, T(u) - u_star);
            worst = std::max(worst, after / before - s.op.c_T);
            if (after > (s.op.c_T + 1e-9) * before) ++bad;
        }
        ++checked;
    }
    const double secs = seconds_since(t0);
    return {checked == 500 && bad == 0 && secs < 10.0,
            std::to_string(checked) + " instances, " + std::to_string(bad) + " above c_T, worst excess " +
                fmt("%.2e", worst) + ", " + std::to_string(box_active) + " with active box, " + fmt("%.2f s", secs)};
}

// The robot fleet settles on the closed-form Nash equilibrium.
Outcome robots_reach_equilibrium() {
    const auto t0 = Clock::now();
    const RobotScenario scn;
    const auto setup = build_robots(scn);
    ClosedLoopConfig cfg;
    cfg.tau = 0.5;
    cfg.eps = 1.0;
    cfg.substeps = 50;
    cfg.horizon = 60;
    cfg.u0 = setup.u0;
    cfg.x0 = setup.x0;
    const auto log = run_sampled_data(setup.plant, setup.op, setup.w, cfg);
    const Vec ne = robot_unconstrained_ne(scn);
    const bool interior = setup.plant.input_set.contains(ne);
    const double err = (log.samples.back().u - ne).norm();
    Vec rbar(2 * scn.agents());
    for (int i = 0; i < scn.agents(); ++i) rbar.segment<2>(2 * i) = scn.targets[i];
    const double gap = (ne - rbar).norm();
    const double secs = seconds_since(t0);
    return {interior && err <= 1e-3 && gap > 0.0 && secs < 5.0,
            fmt("|u^K - u*| = %.2e", err) + fmt(", |u* - rbar| = %.3f", gap) + fmt(", %.2f s", secs)};
}

// Certified random LTI loops stay inside the ISS envelope and meet the asymptotic gain.
Outcome iss_on_random_lti() {
    const auto t0 = Clock::now();
    Rng rng(7);
    int ok = 0, envelope_bad = 0, tail_bad = 0;
    for (int i = 0; i < 50; ++i) {
        const auto inst = random_certified_lti(rng);
        const auto& s = inst.scenario;
        ClosedLoopConfig cfg;
        cfg.tau = inst.tau;
        cfg.eps = inst.eps;
        cfg.horizon = 400;
        cfg.substeps = 20;
        cfg.u0 = inst.u0;
        cfg.x0 = inst.x0;
        Instrumentation instr;
        instr.oracle = make_offline_oracle(s.plant, s.problem, s.step_gamma);
        instr.bundle = &s.bundle;
        const auto log = run_sampled_data(s.plant, s.op, inst.w, cfg, instr);
        const auto rep = check_iss(log, s.bundle, inst.tau, inst.eps);
        ok += rep.ok();
        envelope_bad += rep.envelope_violations > 0;
        tail_bad += !rep.tail_ok;
    }
    return {ok == 50, std::to_string(ok) + "/50 runs ok, " + std::to_string(envelope_bad) + " envelope failures, " +
                          std::to_string(tail_bad) + " tail failures, " + fmt("%.2f s", seconds_since(t0))};
}

ClosedLoopConfig building_day(const BuildingSetup& b, const BuildingScenario& scn) {
    ClosedLoopConfig cfg;
    cfg.tau = scn.tau;
    cfg.eps = scn.eps;
    cfg.horizon = scn.horizon_samples();
    cfg.substeps = 20;
    cfg.u0 = b.u0;
    cfg.x0 = b.x0;
    return cfg;
}

// The one-step Lyapunov bound holds on every sample of the scalar and building runs.
Outcome one_step_lyapunov_bound() {
    const auto s = build_lti_scenario(scalar_lti(-0.8, 1.0, 1.0, 1.0), QuadraticCost{Mat::Constant(1, 1, 0.5),
                                                                                   Vec::Constant(1, 0.2),
                                                                                   Mat::Identity(1, 1),
                                                                                   Vec::Constant(1, 2.0)},
                                      0.3);
    ClosedLoopConfig cfg;
    cfg.tau = 0.4;
    cfg.eps = 0.5;
    cfg.horizon = 200;
    cfg.substeps = 50;
    cfg.u0 = Vec::Constant(1, -4.0);
    cfg.x0 = Vec::Constant(1, 3.0);
    const auto ws = DisturbanceSignal::sinusoid(Vec::Constant(1, 0.0), Vec::Constant(1, 2.0), Vec::Constant(1, 1.3),
                                                Vec::Constant(1, 0.2));
    const auto scalar = check_lemma1(run_sampled_data(s.plant, s.op, ws, cfg), s.bundle, s.V);

    // held input through the exact zero-order-hold map: the margin must stay nonnegative
    const Vec u_hold = Vec::Constant(1, 1.0);
    const AlgorithmOperator hold{[&](const Vec&, const Vec&) -> Vec { return u_hold; }, 0.0, 0.0, Mat::Identity(1, 1)};
    ClosedLoopConfig held = cfg;
    held.eps = 1.0;
    held.horizon = 40;  // past this W reaches the roundoff floor
    held.u0 = u_hold;
    held.x0 = Vec::Constant(1, 7.0);
    const auto constant_u = check_lemma1(
        run_discrete(s.plant, lti_exact_step(s.sys, cfg.tau), hold, DisturbanceSignal::constant(Vec::Constant(1, 0.5)),
                     held),
        s.bundle, s.V, 0.0);

    const auto bcfg = app::load_config(config_path("building.json"));
    const auto b = build_building(bcfg.building);
    const auto building =
        check_lemma1(run_sampled_data(b.plant, b.op, b.w, building_day(b, bcfg.building)), b.bundle, b.V);
    const bool held_ok = constant_u.checked == 40 && constant_u.violations == 0 && constant_u.worst_margin >= 0.0;
    return {held_ok && scalar.checked == 200 && scalar.violations == 0 && building.checked > 0 &&
                building.violations == 0,
            "held input " + std::to_string(constant_u.violations) + "/" + std::to_string(constant_u.checked) +
                fmt(" (worst margin %.2e)", constant_u.worst_margin) + ", moving input " +
                std::to_string(scalar.violations) + "/" + std::to_string(scalar.checked) + ", building " +
                std::to_string(building.violations) + "/" + std::to_string(building.checked) + " violations"};
}

// Feedback optimization beats the hysteresis thermostat on the shipped building day.
Outcome building_beats_thermostat() {
    auto cfg = app::load_config(config_path("building.json"));
    cfg.building.seed = 1;
    const auto& scn = cfg.building;
    const auto b = build_building(scn);
    const auto fo = evaluate_building(run_sampled_data(b.plant, b.op, b.w, building_day(b, scn)), scn);
    const auto th = evaluate_building(thermostat_baseline(b, scn, scn.horizon_samples(), scn.tau), scn);
    const double dc = 100.0 * (th.total_cost - fo.total_cost) / th.total_cost;
    const double dv = 100.0 * (th.violation_hours - fo.violation_hours) / th.violation_hours;
    return {fo.total_cost < th.total_cost && fo.violation_hours < th.violation_hours,
            fmt("cost -%.2f%%", dc) + fmt(", violations -%.2f%%", dv) +
                fmt(" (fo %.4f", fo.total_cost) + fmt(" / %.3f room-h", fo.violation_hours) +
                fmt(", thermostat %.4f", th.total_cost) + fmt(" / %.3f room-h)", th.violation_hours)};
}

// Leaving the certified region blows up and the CLI reports it with exit code 3.
Outcome instability_demo() {
    const auto cfg = app::load_config(config_path("instability_demo.json"));
    const auto in = app::make_instance(cfg);
    long sample = -1;
    try {
        (void)run_sampled_data(in.plant, in.op, in.w, in.loop_config());
    } catch (const IntegrationDiverged& e) {
        sample = e.sample();
    }
    const bool certified = certify(in.bundle, in.tau, in.eps).certified();
    const fs::path dir = scratch_dir("instability");
    const int code = run_cli("simulate --config " + config_path("instability_demo.json") + " --out " + dir.string(),
                             dir / "log.txt");
    return {!certified && sample >= 0 && code == 3,
            "diverged at sample " + std::to_string(sample) + ", cli exit " + std::to_string(code)};
}

// RK4 global error drops by at least 12x per halving of the substep.
Outcome rk4_order() {
    const auto p = lti_plant(scalar_lti(-3.0, 2.0, 1.0));
    const auto w = DisturbanceSignal::constant(Vec::Constant(1, 0.0));
    const Vec x0 = Vec::Constant(1, 1.0), u = Vec::Constant(1, 1.0);
    const double exact = 2.0 / 3.0 + (1.0 / 3.0) * std::exp(-6.0);
    double prev = std::abs(integrate_hold(p, x0, u, w, 0.0, 2.0, 4)[0] - exact);
    double worst = std::numeric_limits<double>::infinity();
    for (int n : {8, 16, 32}) {
        const double err = std::abs(integrate_hold(p, x0, u, w, 0.0, 2.0, n)[0] - exact);
        worst = std::min(worst, prev / err);
        prev = err;
    }
    return {worst >= 12.0, fmt("smallest error ratio %.2f", worst)};
}

// Two runs of the same config write identical bytes.
Outcome deterministic_output() {
    const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
    const std::string args = "simulate --config " + config_path("building.json") + " --out ";
    const int ca = run_cli(args + a.string(), a / "log.txt");
    const int cb = run_cli(args + b.string(), b / "log.txt");
    const std::string ta = read_file(a / "trajectory.csv"), tb = read_file(b / "trajectory.csv");
    return {ca == 0 && cb == 0 && !ta.empty() && ta == tb,
            "exit codes " + std::to_string(ca) + "/" + std::to_string(cb) + ", " + std::to_string(ta.size()) +
                " bytes, " + (ta == tb ? "identical" : "different")};
}

}  // namespace

int main() {
    const std::function<Outcome()> criteria[] = {small_gain_region,     prox_grad_contraction_rate,
                                                 robots_reach_equilibrium, iss_on_random_lti,
                                                 one_step_lyapunov_bound,  building_beats_thermostat,
                                                 instability_demo,         rk4_order,
                                                 deterministic_output};
    int failures = 0;
    int n = 0;
    for (const auto& c : criteria) {
        ++n;
        Outcome o;
        try {
            o = c();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
    }
    fs::remove_all(fs::temp_directory_path() / ("fes_acceptance_" + std::to_string(::getpid())));
    return failures;
}
