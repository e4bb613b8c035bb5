#include "fes/scenarios/building.hpp"

#include "fes/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace fes::scenarios {

namespace {

constexpr double kPi = std::numbers::pi;

double spectral_norm(const Mat& M) {
    if (M.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(M).singularValues()(0);
}

int wall_index(const BuildingScenario& s, int room, int layer) { return s.rooms + room * s.wall_layers + layer; }

struct SolarProfile {
    double peak;
    [[nodiscard]] double value(double t) const {
        const double h = t - 24.0 * std::floor(t / 24.0);
        if (h < 6.0 || h > 18.0) return 0.0;
        const double s = std::sin(kPi * (h - 6.0) / 12.0);
        return peak * s * s;
    }
    [[nodiscard]] double rate(double t) const {
        const double h = t - 24.0 * std::floor(t / 24.0);
        if (h < 6.0 || h > 18.0) return 0.0;
        return peak * (kPi / 12.0) * std::sin(kPi * (h - 6.0) / 6.0);
    }
    [[nodiscard]] double rate_sup(double t0, double t1) const {
        // On day d the rate is  peak pi/12 sin(pi (t - t_d)/6),  t_d = 24 d + 6.
        const double omega = kPi / 6.0;
        const double amp = peak * (kPi / 12.0) / omega;
        double sup = 0.0;
        for (double d = std::floor(t0 / 24.0); d <= std::floor(t1 / 24.0); d += 1.0) {
            const double td = 24.0 * d + 6.0;
            const double lo = std::max(t0, td);
            const double hi = std::min(t1, td + 12.0);
            if (lo > hi) continue;
            sup = std::max(sup, DisturbanceSignal::sinusoid_rate_sup(amp, omega, -omega * td - kPi / 2.0, lo, hi));
        }
        return sup;
    }
};

}  // namespace

long BuildingScenario::horizon_samples() const { return std::lround(horizon_hours / tau); }

void BuildingScenario::validate() const {
    auto pos = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
    };
    if (rooms < 1) throw Error(ErrorCode::InvalidArgument, "building needs at least one room");
    if (wall_layers < 1) throw Error(ErrorCode::InvalidArgument, "building walls need at least one layer");
    for (auto [v, n] : {std::pair{room_capacity, "room_capacity"}, {wall_capacity, "wall_capacity"},
                        {g_room_wall, "g_room_wall"}, {g_wall_out, "g_wall_out"}, {tau, "tau"},
                        {horizon_hours, "horizon_hours"}, {eta, "eta"}}) {
        pos(v, n);
    }
    if (wall_layers > 1) pos(g_wall_wall, "g_wall_wall");
    if (g_window < 0 || g_floor < 0 || g_room_room < 0) throw Error(ErrorCode::InvalidArgument, "conductances must be nonnegative");
    if (static_cast<int>(solar_aperture.size()) != rooms) throw Error(ErrorCode::ShapeError, "one solar aperture per room");
    if (static_cast<int>(energy_H.size()) != n_u() || static_cast<int>(energy_c.size()) != n_u()) {
        throw Error(ErrorCode::ShapeError, "energy_H and energy_c need one entry per input");
    }
    for (double h : energy_H) pos(h, "energy_H entries");
    if (!(comfort_min < comfort_max)) throw Error(ErrorCode::InvalidInterval, "comfort band is empty");
    if (comfort_backoff < 0.0 || 2.0 * comfort_backoff >= comfort_max - comfort_min) {
        throw Error(ErrorCode::InvalidArgument, "comfort_backoff must leave a nonempty band");
    }
    if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorCode::RelaxationOutOfRange, "eps must lie in (0, 1]");
    if (!(nominal_airflow >= 0.0 && nominal_airflow <= 1.0)) throw Error(ErrorCode::InvalidArgument, "nominal_airflow in [0,1]");
}

BuildingModel building_model(const BuildingScenario& s) {
    s.validate();
    const int n = s.n_x(), R = s.rooms;
    BuildingModel m;
    m.rooms = R;
    m.cap = Vec::Constant(n, s.wall_capacity);
    m.cap.head(R).setConstant(s.room_capacity);
    m.L0 = Mat::Zero(n, n);
    m.B_lin = Mat::Zero(n, s.n_u());
    m.B_w = Mat::Zero(n, s.n_w());
    m.room_mask = Vec::Zero(n);
    m.room_mask.head(R).setOnes();
    m.k_air = s.airflow_max * s.air_cp / R;

    auto link = [&m](int i, int j, double g) {
        m.L0(i, i) += g;
        m.L0(j, j) += g;
        m.L0(i, j) -= g;
        m.L0(j, i) -= g;
    };
    auto boundary = [&m](int i, int w_col, double g) {
        m.L0(i, i) += g;
        m.B_w(i, w_col) += g;
    };
    for (int r = 0; r < R; ++r) {
        boundary(r, 1, s.g_window);
        boundary(r, 2, s.g_floor);
        link(r, wall_index(s, r, 0), s.g_room_wall);
        for (int l = 0; l + 1 < s.wall_layers; ++l) link(wall_index(s, r, l), wall_index(s, r, l + 1), s.g_wall_wall);
        boundary(wall_index(s, r, s.wall_layers - 1), 1, s.g_wall_out);
        if (r + 1 < R) link(r, r + 1, s.g_room_room);

        m.B_lin(r, r) = s.radiator_area * s.radiator_max;
        m.B_lin(r, R + 1) = s.ahu_heat_max / R;
        m.B_lin(r, R + 2) = -s.ahu_cool_max / R;
        m.B_w(r, 0) = s.solar_aperture[r];
        m.B_w(r, 3 + r) = 1.0;
    }
    return m;
}

DisturbanceSignal building_disturbance(const BuildingScenario& s, const OccupancyRealization& occ, bool hide) {
    const int R = s.rooms;
    const SolarProfile solar{hide ? 0.0 : s.solar_peak};
    const double omega = 2.0 * kPi / 24.0;
    const double phase = kPi / 2.0 - omega * s.ambient_peak_hour;
    const double amb_mean = s.ambient_mean, amb_amp = s.ambient_amplitude, ground = s.ground_temperature;
    auto occ_sig = std::make_shared<DisturbanceSignal>(occupancy_signal(occ));

    auto value = [=](double t) -> Vec {
        Vec w(R + 3);
        w[0] = solar.value(t);
        w[1] = amb_mean + amb_amp * std::sin(omega * t + phase);
        w[2] = ground;
        w.tail(R) = hide ? Vec::Zero(R) : occ_sig->value(t);
        return w;
    };
    auto derivative = [=](double t) -> Vec {
        Vec d = Vec::Zero(R + 3);
        d[0] = solar.rate(t);
        d[1] = amb_amp * omega * std::cos(omega * t + phase);
        if (!hide) d.tail(R) = occ_sig->derivative(t);
        return d;
    };
    auto bound = [=](double t0, double t1) {
        const double a = solar.rate_sup(t0, t1);
        const double b = DisturbanceSignal::sinusoid_rate_sup(amb_amp, omega, phase, t0, t1);
        const double c = hide ? 0.0 : occ_sig->rate_bound(t0, t1);
        return std::sqrt(a * a + b * b + c * c);
    };
    Vec lo(R + 3), hi(R + 3);
    lo << 0.0, amb_mean - std::abs(amb_amp), ground, Vec::Zero(R);
    hi << std::max(s.solar_peak, 1.0), amb_mean + std::abs(amb_amp), ground,
        Vec::Constant(R, std::max(1.0, s.occupants * s.occupant_watts));
    DisturbanceSignal sig(value, R + 3, BoxSet(lo, hi));
    sig.with_derivative(derivative).with_rate_bound(bound);
    return sig;
}

BuildingSetup build_building(const BuildingScenario& s) {
    s.validate();
    BuildingSetup out;
    out.model = building_model(s);
    auto M = std::make_shared<const BuildingModel>(out.model);
    const int n = s.n_x(), R = s.rooms, nu = s.n_u(), af = s.airflow_index();

    const Eigen::SelfAdjointEigenSolver<Mat> l0_eig(M->L0);
    const double lambda_L = l0_eig.eigenvalues().minCoeff();
    if (!(lambda_L > 0.0)) throw Error(ErrorCode::UnstableOpenLoop, "RC network has no path to a boundary");

    PlantModel& p = out.plant;
    p.state_dim = n;
    p.input_dim = nu;
    p.disturbance_dim = s.n_w();
    p.output_dim = s.n_y();
    p.dynamics = [M, af](const Vec& x, const Vec& u, const Vec& w) -> Vec {
        const double air = u[af] * M->k_air;
        Vec rhs = -M->L0 * x + M->B_lin * u + M->B_w * w;
        rhs.array() += air * M->room_mask.array() * (w[1] - x.array());
        return (rhs.array() / M->cap.array()).matrix();
    };
    p.output_map = [R](const Vec& x, const Vec& w) -> Vec {
        Vec y(R + 2);
        y << x.head(R), w[1], w[2];
        return y;
    };
    p.steady_state = [M, af](const Vec& u, const Vec& w) -> Vec {
        const double air = u[af] * M->k_air;
        Mat L = M->L0;
        L.diagonal() += air * M->room_mask;
        const Vec rhs = M->B_lin * u + M->B_w * w + air * w[1] * M->room_mask;
        return L.llt().solve(rhs);
    };
    p.input_set = BoxSet::uniform(nu, 0.0, 1.0);

    out.occupancy = sample_occupancy(R, s.occupants, s.schedule, std::ceil(s.horizon_hours / 24.0) + 1.0, s.seed,
                                     s.occupant_watts, s.occupancy_ramp_hours);
    out.w = building_disturbance(s, out.occupancy, false);
    out.w_measured = building_disturbance(s, out.occupancy, true);
    p.disturbance_set = out.w.bounds();

    // Lyapunov function V = dx' Q dx with Q = C / C_min.
    const double cmin = M->cap.minCoeff(), cmax = M->cap.maxCoeff();
    const Vec si = M->cap.cwiseSqrt().cwiseInverse();
    const Mat scaled = si.asDiagonal() * M->L0 * si.asDiagonal();
    const double mu = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (scaled + scaled.transpose())).eigenvalues().minCoeff();
    const double bw_norm = spectral_norm(M->B_w) + M->k_air * std::sqrt(static_cast<double>(R));
    const double beta = std::sqrt(cmax / cmin) * bw_norm / lambda_L;

    // Bound on |x_ss - T_amb 1| over the boxes, then on the input Jacobian of x_ss.
    Mat B_nolair = M->B_lin;
    B_nolair.col(af).setZero();
    const double u_lin_max = std::sqrt(static_cast<double>(nu - 1));
    const Vec ground_col = M->B_w.col(2);
    const double dTg = std::abs(s.ground_temperature - s.ambient_mean) + std::abs(s.ambient_amplitude);
    const double offset_max = (spectral_norm(B_nolair) * u_lin_max + M->B_w.col(0).norm() * s.solar_peak +
                               s.occupants * s.occupant_watts + ground_col.norm() * dTg) /
                              lambda_L;
    const double ell_x = std::hypot(spectral_norm(B_nolair), M->k_air * offset_max) / lambda_L;

    LyapunovCertificate& cert = out.cert;
    cert.mu = mu;
    cert.alpha1 = 1.0;
    cert.alpha2 = cmax / cmin;
    cert.ell_g = 1.0;
    cert.ell_x = ell_x;
    const double kc = beta * beta / mu;
    cert.sigma_c = [kc](double z) { return kc * z * z; };
    cert.validate();

    const auto plant_ss = p.steady_state;
    out.V = [M, plant_ss, cmin](const Vec& x, const Vec& u, const Vec& w) {
        const Vec d = x - plant_ss(u, w);
        return d.dot(M->cap.asDiagonal() * d) / cmin;
    };

    // Room sensitivity linearized at the nominal air flow.
    Mat Ln = M->L0;
    Ln.diagonal() += s.nominal_airflow * M->k_air * M->room_mask;
    const Eigen::LLT<Mat> Ln_fact(Ln);
    Mat Bn = M->B_lin;
    Bn.col(af) = M->k_air * s.nominal_delta_t * M->room_mask;
    out.D_u = Ln_fact.solve(Bn).topRows(R);

    Vec H(nu), c(nu);
    for (int i = 0; i < nu; ++i) {
        H[i] = s.energy_H[i];
        c[i] = s.energy_c[i];
    }
    const Mat D = out.D_u;
    const double lo = s.comfort_min + s.comfort_backoff, hi = s.comfort_max - s.comfort_backoff, eta = s.eta;
    EquilibriumProblem& pr = out.problem;
    pr.input_dim = nu;
    pr.F = [H, c, D, lo, hi, eta, R](const Vec& u, const Vec& y) -> Vec {
        Vec g(R);
        for (int i = 0; i < R; ++i) g[i] = dist_to_interval_grad(y[i], lo, hi).gradient;
        return (H.array() * u.array()).matrix() + 0.5 * c + eta * D.transpose() * g;
    };
    pr.resolvent = box_resolvent(p.input_set);
    const double dn = spectral_norm(D);
    // The Jacobian of u -> F(u, D u + ...) lies between diag(H) and diag(H) + eta D'D.
    const Mat upper = Mat(H.asDiagonal()) + eta * D.transpose() * D;
    pr.strong_monotonicity = H.minCoeff();
    pr.lipschitz_F = Eigen::SelfAdjointEigenSolver<Mat>(upper).eigenvalues().maxCoeff();
    pr.lipschitz_F_output = eta * dn;
    pr.lipschitz_solution = eta * dn * (bw_norm / lambda_L) / pr.strong_monotonicity;
    pr.validate();

    const double m = pr.strong_monotonicity, l = pr.lipschitz_F;
    out.step_gamma = s.step_gamma > 0.0 ? s.step_gamma : 1.5 * m / (l * l);
    out.op = prox_grad_operator(pr, out.step_gamma);
    out.bundle = make_bundle(cert, pr.lipschitz_solution, out.op);

    out.x0 = Vec::Constant(n, s.initial_temperature);
    // Start from the equilibrium input for what can be measured at t = 0.
    out.u0 = make_offline_oracle(out.plant, out.problem, out.step_gamma)(out.w_measured.value(0.0), Vec::Zero(nu));
    return out;
}

SampledPolicy thermostat_policy(const BuildingScenario& s) {
    const int R = s.rooms, af = s.airflow_index();
    const double mid = 0.5 * (s.comfort_min + s.comfort_max);
    return [R, af, mid](long, double, const Vec&, const Vec& y, const Vec& u_prev) -> Vec {
        Vec u = Vec::Zero(R + 3);
        for (int i = 0; i < R; ++i) {
            const bool was_on = u_prev[i] > 0.5;
            u[i] = (y[i] <= mid - 2.0 || (was_on && y[i] < mid)) ? 1.0 : 0.0;
        }
        const double mean = y.head(R).mean();
        const bool heat_on = u_prev[af + 1] > 0.5;
        const bool cool_on = u_prev[af + 2] > 0.5;
        u[af] = 0.0;
        u[af + 1] = (mean <= mid - 2.0 || (heat_on && mean < mid)) ? 1.0 : 0.0;
        u[af + 2] = (mean >= mid + 2.0 || (cool_on && mean > mid)) ? 1.0 : 0.0;
        return u;
    };
}

TrajectoryLog thermostat_baseline(const BuildingSetup& setup, const BuildingScenario& scn, long horizon, double tau) {
    ClosedLoopConfig cfg;
    cfg.tau = tau;
    cfg.eps = 1.0;
    cfg.horizon = horizon;
    cfg.u0 = setup.u0;
    cfg.x0 = setup.x0;
    return run_policy(setup.plant, thermostat_policy(scn), setup.w, cfg);
}

double building_stage_cost(const Vec& u, const Vec& y, const BuildingScenario& s, double* energy, double* comfort) {
    double e = 0.0;
    for (int i = 0; i < s.n_u(); ++i) e += 0.5 * (s.energy_H[i] * u[i] + s.energy_c[i]) * u[i];
    double c = 0.0;
    for (int i = 0; i < s.rooms; ++i) c += s.eta * dist_to_interval_grad(y[i], s.comfort_min, s.comfort_max).value;
    if (energy) *energy = e;
    if (comfort) *comfort = c;
    return e + c;
}

BuildingMetrics evaluate_building(const TrajectoryLog& log, const BuildingScenario& s) {
    BuildingMetrics m;
    const double tau = log.tau;
    const double heat_w = s.radiator_area * s.radiator_max;
    for (std::size_t k = 0; k + 1 < log.samples.size(); ++k) {
        const auto& r = log.samples[k];
        double e = 0.0, c = 0.0;
        m.total_cost += tau * building_stage_cost(r.u, r.y, s, &e, &c);
        m.energy_cost += tau * e;
        m.comfort_cost += tau * c;
        for (int i = 0; i < s.rooms; ++i) {
            const double d = std::max({0.0, s.comfort_min - r.y[i], r.y[i] - s.comfort_max});
            if (d > 0.0) m.violation_hours += tau;
            m.degree_hours += tau * d;
        }
        m.heat_kwh += tau * (r.u.head(s.rooms).sum() * heat_w + r.u[s.airflow_index() + 1] * s.ahu_heat_max) / 1000.0;
    }
    return m;
}

}  // namespace fes::scenarios
