#include "fes/scenarios/robots.hpp"

#include <cmath>
#include <numbers>

namespace fes::scenarios {

namespace {

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);
    return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace

void RobotScenario::validate() const {
    const int n = agents();
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "at least one robot is required");
    if (!(k1 > 0.0) || !(k2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "robot gains must be positive");
    if (!(coupling >= 0.0)) throw Error(ErrorCode::InvalidArgument, "coupling weight must be nonnegative");
    if ((box_lower.array() >= box_upper.array()).any()) throw Error(ErrorCode::InvalidArgument, "empty robot box");
    if (!start_positions.empty() && static_cast<int>(start_positions.size()) != n) {
        throw Error(ErrorCode::ShapeError, "one start position per robot");
    }
    if (!start_headings.empty() && static_cast<int>(start_headings.size()) != n) {
        throw Error(ErrorCode::ShapeError, "one start heading per robot");
    }
}

double heading_error(double a, double b, double theta, const Eigen::Vector2d& cmd) {
    return wrap_angle(std::numbers::pi + theta - std::atan2(b - cmd.y(), a - cmd.x()));
}

Vec robot_unconstrained_ne(const RobotScenario& scn) {
    scn.validate();
    const int n = scn.agents();
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (const auto& t : scn.targets) sum += t;
    Vec u(2 * n);
    for (int i = 0; i < n; ++i) {
        u.segment<2>(2 * i) = (scn.targets[i] + scn.coupling * sum) / (1.0 + scn.coupling * n);
    }
    return u;
}

RobotSetup build_robots(const RobotScenario& scn) {
    scn.validate();
    const int n = scn.agents();
    const double k1 = scn.k1, k2 = scn.k2, c = scn.coupling;
    const int nyi = 2 * n;  // own error plus n-1 relative positions

    RobotSetup s;
    PlantModel& p = s.plant;
    p.state_dim = 3 * n;
    p.input_dim = 2 * n;
    p.disturbance_dim = 2 * n;
    p.output_dim = nyi * n;
    p.dynamics = [n, k1, k2](const Vec& x, const Vec& u, const Vec&) -> Vec {
        Vec dx(3 * n);
        for (int i = 0; i < n; ++i) {
            const double a = x[3 * i], b = x[3 * i + 1], th = x[3 * i + 2];
            const Eigen::Vector2d cmd = u.segment<2>(2 * i);
            const double phi = heading_error(a, b, th, cmd);
            const double v = k1 * std::hypot(a - cmd.x(), b - cmd.y()) * std::cos(phi);
            const double om = -k1 * std::cos(phi) * std::sin(phi) - k2 * phi;
            dx[3 * i] = v * std::cos(th);
            dx[3 * i + 1] = v * std::sin(th);
            dx[3 * i + 2] = om;
        }
        return dx;
    };
    p.output_map = [n, nyi](const Vec& x, const Vec& w) -> Vec {
        Vec y(nyi * n);
        for (int i = 0; i < n; ++i) {
            const Eigen::Vector2d ri(x[3 * i], x[3 * i + 1]);
            y.segment<2>(nyi * i) = ri - w.segment<2>(2 * i);
            int slot = 1;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                y.segment<2>(nyi * i + 2 * slot++) = ri - Eigen::Vector2d(x[3 * j], x[3 * j + 1]);
            }
        }
        return y;
    };
    // At rest on the command the heading error vanishes for theta = pi.
    p.steady_state = [n](const Vec& u, const Vec&) -> Vec {
        Vec x(3 * n);
        for (int i = 0; i < n; ++i) {
            x.segment<2>(3 * i) = u.segment<2>(2 * i);
            x[3 * i + 2] = std::numbers::pi;
        }
        return x;
    };
    // Headings have no unique rest value away from the command; compare positions only.
    p.state_deviation = [n](const Vec& x, const Vec& xss) -> Vec {
        Vec d(2 * n);
        for (int i = 0; i < n; ++i) d.segment<2>(2 * i) = x.segment<2>(3 * i) - xss.segment<2>(3 * i);
        return d;
    };

    s.partition.agent_dims.assign(n, 2);
    s.partition.output_dims.assign(n, nyi);
    const BoxSet box(scn.box_lower, scn.box_upper);
    s.partition.boxes.assign(n, box);
    p.input_set = s.partition.joint_box();

    Vec targets(2 * n);
    for (int i = 0; i < n; ++i) targets.segment<2>(2 * i) = scn.targets[i];
    const Vec spread = Vec::Constant(2 * n, 20.0);
    p.disturbance_set = BoxSet(targets - spread, targets + spread);
    s.w = DisturbanceSignal::constant(targets);

    // Pseudo-gradient with J_i written in measured quantities: |e_i|^2 + c sum_j |d_ij|^2.
    std::vector<AgentGradientFn> gu, gy;
    std::vector<AgentJacobianFn> jh;
    for (int i = 0; i < n; ++i) {
        gu.emplace_back([](const Vec& ui, const Vec&) { return Vec::Zero(ui.size()); });
        gy.emplace_back([i, nyi, c](const Vec&, const Vec& y) -> Vec {
            Vec g = y.segment(nyi * i, nyi);
            g.head<2>() *= 2.0;
            g.tail(nyi - 2) *= 2.0 * c;
            return g;
        });
        jh.emplace_back([nyi](const Vec&) -> Mat {
            Mat J(nyi, 2);
            for (int r = 0; r < nyi / 2; ++r) J.block<2, 2>(2 * r, 0).setIdentity();
            return J;
        });
    }
    EquilibriumProblem& pr = s.problem;
    pr.input_dim = 2 * n;
    pr.F = game_pseudo_gradient(s.partition, gu, gy, jh);
    pr.resolvent = box_resolvent(p.input_set);
    pr.strong_monotonicity = 2.0;
    pr.lipschitz_F = 2.0 + 2.0 * c * n;
    pr.lipschitz_solution = 1.0;  // |dF/dw| / m = 2 / 2
    pr.lipschitz_F_output = std::sqrt(4.0 + 4.0 * c * c * (n - 1));
    pr.validate();
    s.oracle_gamma = pr.strong_monotonicity / (pr.lipschitz_F * pr.lipschitz_F);

    // Best response: argmin_xi |xi - rbar_i|^2 + c sum_j |xi - r_j|^2 with r_j = rbar_i + e_i - d_ij.
    const double den = 2.0 + 2.0 * c * (n - 1);
    std::vector<LocalSolverFn> solvers;
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d rbar = scn.targets[i];
        solvers.emplace_back([i, n, nyi, c, den, rbar, box](const Vec& y) -> Vec {
            const Eigen::Vector2d e = y.segment<2>(nyi * i);
            Eigen::Vector2d acc = 2.0 * rbar;
            for (int slot = 1; slot < n; ++slot) {
                acc += 2.0 * c * (rbar + e - y.segment<2>(nyi * i + 2 * slot));
            }
            return box.project(Vec(acc / den));
        });
    }
    const double c_T = 2.0 * c * (n - 1) / den;
    const double ell_T = 2.0 * c * std::sqrt(static_cast<double>((n - 1) * (n - 1) + (n - 1))) / den;
    s.op = best_response_operator(s.partition, std::move(solvers), c_T, ell_T);

    // Nominal inner-loop constants: position error decays at rate ~k1 once aligned, so V = |dr|^2
    // is taken with mu = 2 k1. This is a modeling assumption, not a proof for the unicycle.
    LyapunovCertificate cert;
    cert.mu = 2.0 * k1;
    cert.alpha1 = 1.0;
    cert.alpha2 = 1.0;
    cert.ell_g = n == 1 ? 1.0 : std::sqrt(1.0 + 2.0 * n);
    cert.ell_x = 1.0;
    cert.sigma_c = [](double z) { return z * z; };
    s.bundle = make_bundle(cert, pr.lipschitz_solution, s.op);

    s.x0 = Vec::Zero(3 * n);
    for (int i = 0; i < n; ++i) {
        if (!scn.start_positions.empty()) s.x0.segment<2>(3 * i) = scn.start_positions[i];
        if (!scn.start_headings.empty()) s.x0[3 * i + 2] = scn.start_headings[i];
    }
    s.u0 = p.input_set.project(targets);
    return s;
}

}  // namespace fes::scenarios
