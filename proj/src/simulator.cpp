#include "fes/simulator.hpp"

#include "fes/io/csv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fes {

namespace {

constexpr double kFeasibilityTol = 1e-9;

using DecideFn = std::function<Vec(long k, double t, const Vec& x, const Vec& y, const Vec& u_prev)>;

void check_input(const PlantModel& plant, const Vec& u, long k) {
    if (!u.allFinite()) {
        throw IntegrationDiverged("non-finite input at sample " + std::to_string(k), k);
    }
    if (!plant.input_set.contains(u, kFeasibilityTol)) {
        throw Error(ErrorCode::InputOutOfRange, "input left the input set at sample " + std::to_string(k));
    }
}

void fill_envelopes(TrajectoryLog& log, const CertificateBundle& b) {
    if (log.samples.empty() || log.samples.front().du.size() == 0) return;
    if (!certify(b, log.tau, log.eps).certified()) return;
    const auto& s0 = log.samples.front();
    const double dx0 = s0.dx.norm();
    const double du0 = s0.du.norm();
    double z_sup = 0.0;
    for (auto& s : log.samples) {
        try {
            s.envelope = iss_envelope(b, log.tau, log.eps, dx0, du0, z_sup, s.k);
        } catch (const Error&) {
            return;  // rho(M) numerically at 1
        }
        z_sup = std::max(z_sup, s.z);
    }
}

TrajectoryLog run_core(const PlantModel& plant, const DiscreteStepFn& psi, const DecideFn& decide,
                       const DisturbanceSignal& w, const ClosedLoopConfig& cfg, const Instrumentation& instr) {
    cfg.validate(plant);
    if (w.dim() != plant.disturbance_dim) {
        throw Error(ErrorCode::ShapeError, "disturbance signal dimension does not match the plant");
    }
    TrajectoryLog log;
    log.n_x = plant.state_dim;
    log.n_u = plant.input_dim;
    log.n_y = plant.output_dim;
    log.n_w = plant.disturbance_dim;
    log.tau = cfg.tau;
    log.eps = cfg.eps;
    log.samples.reserve(static_cast<std::size_t>(cfg.horizon) + 1);

    Vec x = cfg.x0;
    Vec u_prev = cfg.u0;
    Vec warm;
    const double h = cfg.tau / cfg.substeps;

    for (long k = 0; k <= cfg.horizon; ++k) {
        const double t = static_cast<double>(k) * cfg.tau;
        if (k > 0) {
            try {
                x = psi(x, u_prev, w, k - 1);
            } catch (const IntegrationDiverged& e) {
                throw IntegrationDiverged(e.detail() + " (sample " + std::to_string(k) + ")", k);
            }
            if (!x.allFinite()) {
                throw IntegrationDiverged("non-finite state at sample " + std::to_string(k), k);
            }
        }
        const Vec wk = w.value(t);
        const Vec y = plant.output_map(x, wk);
        Vec u = decide(k, t, x, y, u_prev);
        check_input(plant, u, k);

        SampleRecord s;
        s.k = k;
        s.t = t;
        s.x = x;
        s.u = u;
        s.y = y;
        s.w = wk;
        s.z = w.rate_bound(t, t + cfg.tau);
        s.dx = plant.deviation(x, plant.steady_state(u, wk));
        if (instr.oracle) {
            s.u_star = instr.oracle(wk, warm);
            warm = s.u_star;
            s.y_star = plant.steady_output_unchecked(s.u_star, wk);
            s.du = u - s.u_star;
            s.dy = y - s.y_star;
        }
        if (instr.lyapunov) s.W = std::sqrt(std::max(0.0, instr.lyapunov(x, u, wk)));
        log.samples.push_back(std::move(s));

        if (cfg.log_intersample && k < cfg.horizon && plant.state_dim > 0) {
            Vec xd = x;
            for (int j = 1; j < cfg.substeps; ++j) {
                const double tj = t + (j - 1) * h;
                xd = integrate_hold(plant, xd, u, w, tj, h, 1);
                const double td = t + j * h;
                const Vec wd = w.value(td);
                log.dense.push_back(DenseRecord{td, xd, u, plant.output_map(xd, wd), wd});
            }
        }
        u_prev = std::move(u);
    }
    if (instr.bundle) fill_envelopes(log, *instr.bundle);
    return log;
}

}  // namespace

void ClosedLoopConfig::validate(const PlantModel& plant) const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::InvalidSamplingPeriod, "tau must be positive");
    if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorCode::RelaxationOutOfRange, "eps must lie in (0, 1]");
    if (horizon < 0) throw Error(ErrorCode::InvalidArgument, "horizon must be nonnegative");
    if (substeps < 1) throw Error(ErrorCode::InvalidArgument, "substeps must be at least 1");
    require_size(u0, plant.input_dim, "u0");
    require_size(x0, plant.state_dim, "x0");
    if (!plant.input_set.contains(u0, kFeasibilityTol)) {
        throw Error(ErrorCode::InputOutOfRange, "u0 is outside the input set");
    }
}

SolutionOracle make_offline_oracle(const PlantModel& plant, const EquilibriumProblem& problem, double step_gamma,
                                   double tol, int max_iters) {
    return [&plant, problem, step_gamma, tol, max_iters](const Vec& w, const Vec& warm) {
        const SteadyMapFn h = [&plant, &w](const Vec& u) { return plant.steady_output_unchecked(u, w); };
        const Vec start = warm.size() == problem.input_dim ? warm : plant.input_set.midpoint();
        return solve_offline(problem, h, step_gamma, tol, max_iters, start).u;
    };
}

std::vector<std::string> TrajectoryLog::csv_header() const {
    std::vector<std::string> h{"t", "k"};
    auto add = [&h](const char* p, int n) {
        for (int i = 0; i < n; ++i) h.push_back(std::string(p) + "_" + std::to_string(i));
    };
    add("x", n_x);
    add("u", n_u);
    add("y", n_y);
    add("w", n_w);
    for (const char* c : {"du_norm", "dx_norm", "dy_norm", "W", "envelope", "z"}) h.emplace_back(c);
    return h;
}

void TrajectoryLog::write_csv(std::ostream& out) const {
    io::CsvWriter csv(out);
    csv.header(csv_header());
    auto vec = [&csv](const Vec& v, int n) {
        for (int i = 0; i < n; ++i) {
            if (i < v.size()) csv.field(v[i]);
            else csv.empty();
        }
    };
    auto opt = [&csv](double v) {
        if (std::isnan(v)) csv.empty();
        else csv.field(v);
    };
    std::size_t d = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        csv.field(s.t).field(s.k);
        vec(s.x, n_x);
        vec(s.u, n_u);
        vec(s.y, n_y);
        vec(s.w, n_w);
        opt(s.du.size() ? s.du.norm() : std::nan(""));
        opt(s.dx.norm());
        opt(s.dy.size() ? s.dy.norm() : std::nan(""));
        opt(s.W);
        opt(s.envelope);
        csv.field(s.z);
        csv.end_row();
        const double t_next = i + 1 < samples.size() ? samples[i + 1].t : std::numeric_limits<double>::infinity();
        for (; d < dense.size() && dense[d].t < t_next; ++d) {
            const auto& r = dense[d];
            csv.field(r.t).field(-1L);
            vec(r.x, n_x);
            vec(r.u, n_u);
            vec(r.y, n_y);
            vec(r.w, n_w);
            for (int c = 0; c < 6; ++c) csv.empty();
            csv.end_row();
        }
    }
}

std::string TrajectoryLog::to_csv() const {
    std::ostringstream os;
    write_csv(os);
    return os.str();
}

DiscreteStepFn rk4_step(const PlantModel& plant, double tau, int substeps) {
    return [&plant, tau, substeps](const Vec& x, const Vec& u, const DisturbanceSignal& w, long k) {
        return integrate_hold(plant, x, u, w, static_cast<double>(k) * tau, tau, substeps);
    };
}

TrajectoryLog run_discrete(const PlantModel& plant, const DiscreteStepFn& psi, const AlgorithmOperator& op,
                           const DisturbanceSignal& w, const ClosedLoopConfig& cfg, const Instrumentation& instr) {
    const double eps = cfg.eps;
    const DecideFn decide = [&op, eps](long k, double, const Vec&, const Vec& y, const Vec& u_prev) -> Vec {
        if (k == 0) return u_prev;
        return relaxed_step(op, eps, u_prev, y);
    };
    return run_core(plant, psi, decide, w, cfg, instr);
}

TrajectoryLog run_sampled_data(const PlantModel& plant, const AlgorithmOperator& op, const DisturbanceSignal& w,
                               const ClosedLoopConfig& cfg, const Instrumentation& instr) {
    return run_discrete(plant, rk4_step(plant, cfg.tau, cfg.substeps), op, w, cfg, instr);
}

TrajectoryLog run_feedforward_baseline(const PlantModel& plant, const SolutionOracle& feedforward,
                                       const DisturbanceSignal& w_measured, const DisturbanceSignal& w_true,
                                       const ClosedLoopConfig& cfg, const Instrumentation& instr) {
    Vec warm;
    const DecideFn decide = [&](long, double t, const Vec&, const Vec&, const Vec&) -> Vec {
        Vec u = feedforward(w_measured.value(t), warm);
        warm = u;
        return u;
    };
    return run_core(plant, rk4_step(plant, cfg.tau, cfg.substeps), decide, w_true, cfg, instr);
}

TrajectoryLog run_policy(const PlantModel& plant, const SampledPolicy& policy, const DisturbanceSignal& w,
                         const ClosedLoopConfig& cfg, const Instrumentation& instr) {
    return run_core(plant, rk4_step(plant, cfg.tau, cfg.substeps), policy, w, cfg, instr);
}

Lemma1Report check_lemma1(const TrajectoryLog& log, const CertificateBundle& bundle, const LyapunovFn& V,
                          double tol) {
    Lemma1Report rep;
    if (log.samples.size() < 2) return rep;
    const double cW = c_w(bundle, log.tau);
    const double lW = bundle.ell_W();
    const double sq_tau = std::sqrt(log.tau);
    auto W = [&V](const Vec& x, const Vec& u, const Vec& w) { return std::sqrt(std::max(0.0, V(x, u, w))); };
    for (std::size_t k = 0; k + 1 < log.samples.size(); ++k) {
        const auto& s = log.samples[k];
        const auto& n = log.samples[k + 1];
        const Vec& u_prev = k == 0 ? s.u : log.samples[k - 1].u;
        const double lhs = W(n.x, s.u, n.w);
        const double rhs = cW * W(s.x, u_prev, s.w) + cW * lW * (s.u - u_prev).norm() + sq_tau * bundle.sigma(s.z);
        const double margin = rhs - lhs;
        rep.worst_margin = std::min(rep.worst_margin, margin);
        ++rep.checked;
        if (margin < -tol * (1.0 + std::abs(rhs))) ++rep.violations;
    }
    return rep;
}

std::size_t tail_start(std::size_t rows) noexcept {
    if (rows == 0) return 0;
    const std::size_t tail = std::max<std::size_t>(1, rows / 5);
    return rows - tail;
}

IssReport check_iss(const TrajectoryLog& log, const CertificateBundle& bundle, double tau, double eps,
                    double slack) {
    IssReport rep;
    static_cast<void>(iss_constants(bundle, tau, eps));  // throws outside the certified region
    if (log.samples.empty()) return rep;
    const auto& s0 = log.samples.front();
    if (s0.du.size() == 0) throw Error(ErrorCode::InvalidArgument, "ISS check needs oracle columns");
    const double dx0 = s0.dx.norm();
    const double du0 = s0.du.norm();
    double z_sup = 0.0;
    for (const auto& s : log.samples) {
        const double env = iss_envelope(bundle, tau, eps, dx0, du0, z_sup, s.k);
        const double err = std::hypot(s.dx.norm(), s.du.norm());
        const double margin = env - err;
        rep.worst_envelope_margin = std::min(rep.worst_envelope_margin, margin);
        if (margin < -slack) ++rep.envelope_violations;
        ++rep.checked;
        z_sup = std::max(z_sup, s.z);
    }
    for (std::size_t i = tail_start(log.samples.size()); i < log.samples.size(); ++i) {
        rep.tail_dy_max = std::max(rep.tail_dy_max, log.samples[i].dy.norm());
        rep.tail_z_max = std::max(rep.tail_z_max, log.samples[i].z);
    }
    rep.tail_gain_bound = asymptotic_gain(bundle, tau, eps, rep.tail_z_max);
    rep.tail_ok = rep.tail_dy_max <= rep.tail_gain_bound + slack;
    return rep;
}

}  // namespace fes
