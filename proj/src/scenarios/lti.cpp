#include "fes/scenarios/lti.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <memory>

namespace fes::scenarios {

namespace {

struct LtiData {
    LtiSystem sys;
    Eigen::LDLT<Mat> L_fact;
};

std::shared_ptr<const LtiData> share(const LtiSystem& sys) {
    sys.validate();
    auto d = std::make_shared<LtiData>();
    d->sys = sys;
    d->L_fact.compute(sys.L);
    return d;
}

double spectral_norm(const Mat& M) {
    if (M.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(M).singularValues()(0);
}

Mat symmetric(const Mat& M) { return 0.5 * (M + M.transpose()); }

Mat normal_matrix(Rng& rng, int r, int c) {
    Mat M(r, c);
    for (int j = 0; j < c; ++j) M.col(j) = sample_normal(r, rng);
    return M;
}

Vec uniform_vec(Rng& rng, int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = sample_uniform(rng, lo, hi);
    return v;
}

}  // namespace

Mat LtiSystem::A() const { return -(cap.cwiseInverse().asDiagonal() * L); }

void LtiSystem::validate() const {
    const int n = n_x();
    if (n < 1 || L.cols() != n || cap.size() != n) throw Error(ErrorCode::ShapeError, "LTI: L must be square, cap sized n_x");
    if (B.rows() != n || E.rows() != n || Cout.cols() != n) throw Error(ErrorCode::ShapeError, "LTI: B, E, Cout shapes");
    if ((cap.array() <= 0.0).any()) throw Error(ErrorCode::InvalidArgument, "LTI: capacitances must be positive");
    if ((L - L.transpose()).norm() > 1e-12 * (1.0 + L.norm())) throw Error(ErrorCode::InvalidArgument, "LTI: L must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(L);
    if (es.eigenvalues().minCoeff() <= 0.0) throw Error(ErrorCode::UnstableOpenLoop, "LTI: L must be positive definite");
    if (input_box.size() != n_u() || disturbance_box.size() != n_w()) throw Error(ErrorCode::ShapeError, "LTI: box sizes");
}

LtiSystem scalar_lti(double a, double b, double c, double e, double u_lo, double u_hi) {
    if (!(a < 0.0)) throw Error(ErrorCode::UnstableOpenLoop, "scalar plant needs a < 0");
    LtiSystem s;
    s.cap = Vec::Ones(1);
    s.L = Mat::Constant(1, 1, -a);
    s.B = Mat::Constant(1, 1, b);
    s.E = Mat::Constant(1, 1, e);
    s.Cout = Mat::Constant(1, 1, c);
    s.input_box = BoxSet::uniform(1, u_lo, u_hi);
    s.disturbance_box = BoxSet::uniform(1, -1e3, 1e3);
    return s;
}

PlantModel lti_plant(const LtiSystem& sys) {
    auto d = share(sys);
    PlantModel p;
    p.state_dim = sys.n_x();
    p.input_dim = sys.n_u();
    p.disturbance_dim = sys.n_w();
    p.output_dim = sys.n_y();
    p.dynamics = [d](const Vec& x, const Vec& u, const Vec& w) -> Vec {
        const auto& s = d->sys;
        return ((-s.L * x + s.B * u + s.E * w).array() / s.cap.array()).matrix();
    };
    p.output_map = [d](const Vec& x, const Vec&) -> Vec { return d->sys.Cout * x; };
    p.steady_state = [d](const Vec& u, const Vec& w) -> Vec { return d->L_fact.solve(d->sys.B * u + d->sys.E * w); };
    p.input_set = sys.input_box;
    p.disturbance_set = sys.disturbance_box;
    return p;
}

LyapunovCertificate lti_certificate(const LtiSystem& sys) {
    sys.validate();
    const Vec s = sys.cap.cwiseSqrt();
    const Vec si = s.cwiseInverse();
    const Mat scaled = si.asDiagonal() * sys.L * si.asDiagonal();
    const double mu = Eigen::SelfAdjointEigenSolver<Mat>(symmetric(scaled)).eigenvalues().minCoeff();
    const Eigen::LDLT<Mat> Lf(sys.L);
    const double beta = spectral_norm(s.asDiagonal() * Lf.solve(sys.E));
    LyapunovCertificate c;
    c.mu = mu;
    c.alpha1 = sys.cap.minCoeff();
    c.alpha2 = sys.cap.maxCoeff();
    c.ell_g = spectral_norm(sys.Cout);
    c.ell_x = spectral_norm(Lf.solve(sys.B));
    const double k = beta * beta / mu;
    c.sigma_c = [k](double z) { return k * z * z; };
    return c;
}

LyapunovFn lti_lyapunov(const LtiSystem& sys) {
    auto d = share(sys);
    return [d](const Vec& x, const Vec& u, const Vec& w) {
        const Vec dx = x - d->L_fact.solve(d->sys.B * u + d->sys.E * w);
        return dx.dot(d->sys.cap.asDiagonal() * dx);
    };
}

DiscreteStepFn lti_exact_step(const LtiSystem& sys, double tau) {
    auto d = share(sys);
    const Mat Ad = (sys.A() * tau).exp();
    return [d, Ad, tau](const Vec& x, const Vec& u, const DisturbanceSignal& w, long k) -> Vec {
        const Vec xss = d->L_fact.solve(d->sys.B * u + d->sys.E * w.value(static_cast<double>(k) * tau));
        return xss + Ad * (x - xss);
    };
}

EquilibriumProblem lti_fo_problem(const LtiSystem& sys, const QuadraticCost& cost) {
    sys.validate();
    const int nu = sys.n_u();
    const int ny = sys.n_y();
    if (cost.H.rows() != nu || cost.H.cols() != nu || cost.q.size() != nu || cost.R.rows() != ny ||
        cost.R.cols() != ny || cost.y_ref.size() != ny) {
        throw Error(ErrorCode::ShapeError, "quadratic cost shapes do not match the plant");
    }
    const Eigen::LDLT<Mat> Lf(sys.L);
    const Mat D = sys.Cout * Lf.solve(sys.B);
    const Mat G = sys.Cout * Lf.solve(sys.E);
    const Mat DtR = D.transpose() * cost.R;
    const Mat K = symmetric(cost.H + DtR * D);
    const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(K).eigenvalues();

    EquilibriumProblem p;
    p.input_dim = nu;
    p.F = [H = cost.H, q = cost.q, DtR, y_ref = cost.y_ref](const Vec& u, const Vec& y) -> Vec {
        return H * u + q + DtR * (y - y_ref);
    };
    p.resolvent = box_resolvent(sys.input_box);
    p.strong_monotonicity = ev.minCoeff();
    p.lipschitz_F = ev.maxCoeff();
    p.lipschitz_F_output = spectral_norm(DtR);
    p.lipschitz_solution = spectral_norm(DtR * G) / p.strong_monotonicity;
    p.validate();
    return p;
}

Vec lti_unconstrained_optimum(const LtiSystem& sys, const QuadraticCost& cost, const Vec& w) {
    const Eigen::LDLT<Mat> Lf(sys.L);
    const Mat D = sys.Cout * Lf.solve(sys.B);
    const Vec yw = sys.Cout * Lf.solve(sys.E * w);
    const Mat K = symmetric(cost.H + D.transpose() * cost.R * D);
    const Vec rhs = -(cost.q + D.transpose() * cost.R * (yw - cost.y_ref));
    return K.llt().solve(rhs);
}

LtiScenario build_lti_scenario(const LtiSystem& sys, const QuadraticCost& cost, double step_gamma) {
    LtiScenario s;
    s.sys = sys;
    s.cost = cost;
    s.plant = lti_plant(sys);
    s.problem = lti_fo_problem(sys, cost);
    s.cert = lti_certificate(sys);
    s.V = lti_lyapunov(sys);
    const double m = s.problem.strong_monotonicity;
    const double l = s.problem.lipschitz_F;
    s.step_gamma = step_gamma > 0.0 ? step_gamma : m / (l * l);
    s.op = prox_grad_operator(s.problem, s.step_gamma);
    s.bundle = make_bundle(s.cert, s.problem.lipschitz_solution, s.op);
    return s;
}

std::pair<LtiSystem, QuadraticCost> random_lti(Rng& rng, const RandomLtiOptions& opt) {
    std::uniform_int_distribution<int> nx_d(1, opt.max_states), nu_d(1, opt.max_inputs),
        nw_d(1, opt.max_disturbances), ny_d(1, opt.max_outputs);
    const int nx = nx_d(rng), nu = nu_d(rng), nw = nw_d(rng), ny = ny_d(rng);

    LtiSystem s;
    s.cap = uniform_vec(rng, nx, 1.0, 1.5);
    const Mat G = normal_matrix(rng, nx, nx) / std::sqrt(static_cast<double>(nx));
    s.L = symmetric(G * G.transpose()) + std::uniform_real_distribution<double>(0.3, 2.0)(rng) * Mat::Identity(nx, nx);
    s.B = normal_matrix(rng, nx, nu);
    s.E = normal_matrix(rng, nx, nw);
    s.Cout = normal_matrix(rng, ny, nx) / std::sqrt(static_cast<double>(nx));
    s.input_box = BoxSet::uniform(nu, -opt.box_half_width, opt.box_half_width);
    s.disturbance_box = BoxSet::uniform(nw, -10.0, 10.0);

    QuadraticCost c;
    const Mat S = normal_matrix(rng, nu, nu) / std::sqrt(static_cast<double>(nu));
    c.H = symmetric(S * S.transpose()) + 0.2 * Mat::Identity(nu, nu);
    c.q = normal_matrix(rng, nu, 1);
    c.R = Mat(uniform_vec(rng, ny, 0.1, 1.0).asDiagonal());
    c.y_ref = normal_matrix(rng, ny, 1);
    return {s, c};
}

CertifiedLtiInstance random_certified_lti(Rng& rng, const RandomLtiOptions& opt) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        auto [sys, cost] = random_lti(rng, opt);
        const int nw = sys.n_w();
        const Vec offset = uniform_vec(rng, nw, -1.0, 1.0);
        const Vec amp = uniform_vec(rng, nw, 0.0, 1.0);
        const Vec omega = uniform_vec(rng, nw, 0.1, 1.0);
        const Vec phase = uniform_vec(rng, nw, 0.0, 6.283185307179586);
        LtiScenario scn = build_lti_scenario(sys, cost);

        const double tmin = tau_min(scn.bundle);
        const double tau = tmin + std::exp(std::log(0.05) + U(rng) * std::log(20.0));  // (tmin, tmin + 1]
        const double emax = eps_max(scn.bundle, tau);
        const double eps = std::min(1.0, emax * (0.3 + 0.65 * U(rng)));
        if (!(eps > 1e-3) || !certify(scn.bundle, tau, eps).certified()) continue;
        if (!(spectral_radius_2x2(build_M(scn.bundle, tau, eps)) < 1.0 - 1e-6)) continue;

        CertifiedLtiInstance inst{std::move(scn), tau, eps,
                                  DisturbanceSignal::sinusoid(offset, amp, omega, phase), Vec(), Vec()};
        const auto& box = inst.scenario.sys.input_box;
        inst.u0 = box.project(uniform_vec(rng, sys.n_u(), -5.0, 5.0));
        inst.x0 = inst.scenario.plant.steady_state(inst.u0, inst.w.value(0.0)) + uniform_vec(rng, sys.n_x(), -1.0, 1.0);
        return inst;
    }
    throw Error(ErrorCode::NoConvergence, "could not draw a certified LTI instance");
}

}  // namespace fes::scenarios
