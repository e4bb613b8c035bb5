#include "fes/plant.hpp"

#include "fes/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fes {

Vec PlantModel::deviation(const Vec& x, const Vec& x_ss) const {
    if (state_deviation) {
        return state_deviation(x, x_ss);
    }
    return x - x_ss;
}

Vec PlantModel::steady_output_unchecked(const Vec& u, const Vec& w) const {
    return output_map(steady_state(u, w), w);
}

void PlantModel::validate() const {
    if (state_dim < 0 || input_dim <= 0 || disturbance_dim < 0 || output_dim <= 0) {
        throw Error(ErrorCode::InvalidArgument, "plant dimensions must be positive");
    }
    if (!dynamics || !output_map || !steady_state) {
        throw Error(ErrorCode::InvalidArgument, "plant is missing f, g or x_ss");
    }
    if (input_set.size() != input_dim) {
        throw Error(ErrorCode::ShapeError, "input set dimension does not match n_u");
    }
    if (disturbance_set.size() != disturbance_dim) {
        throw Error(ErrorCode::ShapeError, "disturbance set dimension does not match n_w");
    }
}

void LyapunovCertificate::validate() const {
    if (!(mu > 0.0 && alpha1 > 0.0 && alpha2 > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "mu, alpha1 and alpha2 must be positive");
    }
    if (alpha1 > alpha2) {
        throw Error(ErrorCode::InvalidArgument, "alpha1 must not exceed alpha2");
    }
    if (!(ell_g >= 0.0 && ell_x >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "Lipschitz constants must be nonnegative");
    }
    if (!sigma_c) {
        throw Error(ErrorCode::InvalidArgument, "sigma_c is not set");
    }
    if (sigma_c(0.0) != 0.0) {
        throw Error(ErrorCode::InvalidArgument, "sigma_c(0) must be 0");
    }
}

// ---------------------------------------------------------------------------
// DisturbanceSignal

DisturbanceSignal::DisturbanceSignal(ValueFn value, int dim, BoxSet bounds)
    : value_(std::move(value)), dim_(dim), bounds_(std::move(bounds)) {
    if (bounds_.size() != dim_) {
        throw Error(ErrorCode::ShapeError, "disturbance bounds do not match its dimension");
    }
}

DisturbanceSignal& DisturbanceSignal::with_derivative(ValueFn derivative) {
    derivative_ = std::move(derivative);
    return *this;
}

DisturbanceSignal& DisturbanceSignal::with_rate_bound(RateBoundFn bound) {
    rate_bound_ = std::move(bound);
    return *this;
}

Vec DisturbanceSignal::value(double t) const {
    if (dim_ == 0) {
        return Vec(0);
    }
    return value_(t);
}

Vec DisturbanceSignal::derivative(double t) const {
    if (dim_ == 0) {
        return Vec(0);
    }
    if (derivative_) {
        return derivative_(t);
    }
    const double h = 1e-6 * std::max(1.0, std::abs(t));
    return (value_(t + h) - value_(t - h)) / (2.0 * h);
}

double DisturbanceSignal::rate_bound(double t0, double t1) const {
    if (dim_ == 0) {
        return 0.0;
    }
    if (rate_bound_) {
        return rate_bound_(t0, t1);
    }
    double sup = 0.0;
    const int n = kRateGridPoints;
    if (derivative_) {
        for (int i = 0; i < n; ++i) {
            const double t = t0 + (t1 - t0) * static_cast<double>(i) / (n - 1);
            sup = std::max(sup, derivative_(t).norm());
        }
        return sup;
    }
    // Forward differences on the grid.
    const double dt = (t1 - t0) / (n - 1);
    if (dt <= 0.0) {
        return derivative(t0).norm();
    }
    Vec prev = value_(t0);
    for (int i = 1; i < n; ++i) {
        Vec cur = value_(t0 + dt * i);
        sup = std::max(sup, (cur - prev).norm() / dt);
        prev = std::move(cur);
    }
    return sup;
}

DisturbanceSignal DisturbanceSignal::constant(const Vec& w) {
    DisturbanceSignal signal([w](double) { return w; }, static_cast<int>(w.size()), BoxSet(w, w));
    const auto n = w.size();
    signal.with_derivative([n](double) { return Vec(Vec::Zero(n)); });
    signal.with_rate_bound([](double, double) { return 0.0; });
    return signal;
}

double DisturbanceSignal::sinusoid_rate_sup(double amplitude, double omega, double phase, double t0, double t1) {
    const double peak = std::abs(amplitude * omega);
    if (peak == 0.0) {
        return 0.0;
    }
    // |cos| reaches 1 where omega t + phase is a multiple of pi.
    double a0 = omega * t0 + phase;
    double a1 = omega * t1 + phase;
    if (a0 > a1) {
        std::swap(a0, a1);
    }
    if (std::ceil(a0 / M_PI) <= std::floor(a1 / M_PI)) {
        return peak;
    }
    return std::max(peak * std::abs(std::cos(a0)), peak * std::abs(std::cos(a1)));
}

DisturbanceSignal DisturbanceSignal::sinusoid(const Vec& offset, const Vec& amplitude, const Vec& omega,
                                              const Vec& phase) {
    const auto n = offset.size();
    require_size(amplitude, n, "sinusoid amplitude");
    require_size(omega, n, "sinusoid omega");
    require_size(phase, n, "sinusoid phase");
    const Vec lo = offset - amplitude.cwiseAbs();
    const Vec hi = offset + amplitude.cwiseAbs();
    DisturbanceSignal signal(
        [=](double t) {
            Vec w(n);
            for (Eigen::Index j = 0; j < n; ++j) {
                w[j] = offset[j] + amplitude[j] * std::sin(omega[j] * t + phase[j]);
            }
            return w;
        },
        static_cast<int>(n), BoxSet(lo, hi));
    signal.with_derivative([=](double t) {
        Vec d(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            d[j] = amplitude[j] * omega[j] * std::cos(omega[j] * t + phase[j]);
        }
        return d;
    });
    // Norm of the componentwise suprema bounds the supremum of the norm.
    signal.with_rate_bound([=](double t0, double t1) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double s = sinusoid_rate_sup(amplitude[j], omega[j], phase[j], t0, t1);
            acc += s * s;
        }
        return std::sqrt(acc);
    });
    return signal;
}

// ---------------------------------------------------------------------------
// Integration

Vec integrate_hold(const PlantModel& plant, const Vec& x0, const Vec& u, const DisturbanceSignal& w, double t0,
                   double tau, int substeps) {
    if (!(tau > 0.0)) {
        throw Error(ErrorCode::InvalidSamplingPeriod, "integrate_hold needs tau > 0");
    }
    if (substeps < 1) {
        throw Error(ErrorCode::InvalidArgument, "integrate_hold needs substeps >= 1");
    }
    require_size(x0, plant.state_dim, "integrate_hold x0");
    require_size(u, plant.input_dim, "integrate_hold u");
    if (plant.state_dim == 0) {
        return x0;
    }

    const double h = tau / substeps;
    Vec x = x0;
    for (int s = 0; s < substeps; ++s) {
        const double t = t0 + h * s;
        const Vec w0 = w.value(t);
        const Vec wm = w.value(t + 0.5 * h);
        const Vec w1 = w.value(t + h);
        const Vec k1 = plant.dynamics(x, u, w0);
        const Vec k2 = plant.dynamics(x + 0.5 * h * k1, u, wm);
        const Vec k3 = plant.dynamics(x + 0.5 * h * k2, u, wm);
        const Vec k4 = plant.dynamics(x + h * k3, u, w1);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) {
            throw IntegrationDiverged("non-finite state at t = " + std::to_string(t + h));
        }
    }
    return x;
}

Vec steady_output(const PlantModel& plant, const Vec& u, const Vec& w) {
    require_size(u, plant.input_dim, "steady_output u");
    if (!plant.input_set.contains(u)) {
        throw Error(ErrorCode::InputOutOfRange, "u is outside the input set");
    }
    return plant.steady_output_unchecked(u, w);
}

// ---------------------------------------------------------------------------
// Probes

LyapunovProbeReport probe_lyapunov_decay(const PlantModel& plant, const LyapunovCertificate& cert,
                                         const LyapunovFn& V, const DisturbanceSignal& w,
                                         const LyapunovProbeOptions& options) {
    LyapunovProbeReport report;
    Rng rng(options.seed);
    const double dt = options.duration / options.checkpoints;

    for (int trial = 0; trial < options.trials; ++trial) {
        const Vec u = sample_box(plant.input_set, rng);
        const Vec xss0 = plant.steady_state(u, w.value(0.0));
        Vec x = xss0 + sample_normal(plant.state_dim, rng, options.state_spread);
        double t = 0.0;
        for (int c = 0; c <= options.checkpoints; ++c) {
            const Vec f = plant.dynamics(x, u, w.value(t));
            const double h = options.fd_step * std::max(1.0, dt);
            const double v_plus = V(x + h * f, u, w.value(t + h));
            const double v_minus = V(x - h * f, u, w.value(t - h));
            const double v_dot = (v_plus - v_minus) / (2.0 * h);
            const double v = V(x, u, w.value(t));
            const double z = w.derivative(t).norm();
            const double margin = v_dot + cert.mu * v - cert.sigma_c(z);
            report.worst_margin = std::max(report.worst_margin, margin);
            ++report.samples;
            if (margin > options.tolerance * (1.0 + std::abs(v))) {
                ++report.violations;
            }
            if (c < options.checkpoints) {
                x = integrate_hold(plant, x, u, w, t, dt, options.substeps);
                t += dt;
            }
        }
    }
    return report;
}

double estimate_output_lipschitz(const PlantModel& plant, const Vec& w, const Vec& x_center, double spread,
                                 int pairs, std::uint64_t seed) {
    Rng rng(seed);
    double best = 0.0;
    for (int i = 0; i < pairs; ++i) {
        const Vec xa = x_center + sample_normal(plant.state_dim, rng, spread);
        const Vec xb = x_center + sample_normal(plant.state_dim, rng, spread);
        const double dx = (xa - xb).norm();
        if (dx > 0.0) {
            best = std::max(best, (plant.output_map(xa, w) - plant.output_map(xb, w)).norm() / dx);
        }
    }
    return best;
}

double estimate_steady_state_lipschitz(const PlantModel& plant, const Vec& w, int pairs, std::uint64_t seed) {
    Rng rng(seed);
    double best = 0.0;
    for (int i = 0; i < pairs; ++i) {
        const Vec ua = sample_box(plant.input_set, rng);
        const Vec ub = sample_box(plant.input_set, rng);
        const double du = (ua - ub).norm();
        if (du > 0.0) {
            best = std::max(best, (plant.steady_state(ua, w) - plant.steady_state(ub, w)).norm() / du);
        }
    }
    return best;
}

double max_steady_state_residual(const PlantModel& plant, int probes, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int i = 0; i < probes; ++i) {
        const Vec u = sample_box(plant.input_set, rng);
        const Vec w = sample_box(plant.disturbance_set, rng);
        const Vec xss = plant.steady_state(u, w);
        if (plant.state_dim > 0) {
            worst = std::max(worst, plant.dynamics(xss, u, w).norm());
        }
    }
    return worst;
}

}  // namespace fes
