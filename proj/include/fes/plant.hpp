#pragma once

#include "fes/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace fes {

using DynamicsFn = std::function<Vec(const Vec& x, const Vec& u, const Vec& w)>;
using OutputFn = std::function<Vec(const Vec& x, const Vec& w)>;
using SteadyStateFn = std::function<Vec(const Vec& u, const Vec& w)>;
using StateDeviationFn = std::function<Vec(const Vec& x, const Vec& x_ss)>;
using ScalarGain = std::function<double(double)>;
using LyapunovFn = std::function<double(const Vec& x, const Vec& u, const Vec& w)>;

/// Continuous-time plant  x' = f(x,u,w),  y = g(x,w)  with steady-state map x_ss(u,w).
struct PlantModel {
    int state_dim = 0;
    int input_dim = 0;
    int disturbance_dim = 0;
    int output_dim = 0;

    DynamicsFn dynamics;
    OutputFn output_map;
    SteadyStateFn steady_state;
    BoxSet input_set;
    BoxSet disturbance_set;

    /// Optional override for x - x_ss (e.g. to drop coordinates with no
    /// unique rest value). Defaults to plain subtraction.
    StateDeviationFn state_deviation;

    [[nodiscard]] Vec deviation(const Vec& x, const Vec& x_ss) const;
    /// h(u,w) = g(x_ss(u,w), w) without the input-set check.
    [[nodiscard]] Vec steady_output_unchecked(const Vec& u, const Vec& w) const;
    void validate() const;
};

/// Constants of the quadratic-type Lyapunov certificate
///   alpha1 |x - x_ss|^2 <= V <= alpha2 |x - x_ss|^2,   V' <= -mu V + sigma_c(|w'|).
struct LyapunovCertificate {
    double mu = 0.0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double ell_g = 0.0;
    double ell_x = 0.0;
    ScalarGain sigma_c;

    void validate() const;
};

/// Exogenous signal w(t) with a box of admissible values and a bound on
/// sup |w'| over any interval.
class DisturbanceSignal {
public:
    using ValueFn = std::function<Vec(double)>;
    using RateBoundFn = std::function<double(double, double)>;

    /// Grid density used when no analytic rate bound is available.
    static constexpr int kRateGridPoints = 200;

    DisturbanceSignal() = default;
    DisturbanceSignal(ValueFn value, int dim, BoxSet bounds);

    DisturbanceSignal& with_derivative(ValueFn derivative);
    DisturbanceSignal& with_rate_bound(RateBoundFn bound);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] const BoxSet& bounds() const noexcept { return bounds_; }
    [[nodiscard]] Vec value(double t) const;
    [[nodiscard]] Vec derivative(double t) const;
    [[nodiscard]] bool has_derivative() const noexcept { return static_cast<bool>(derivative_); }
    [[nodiscard]] bool has_analytic_rate_bound() const noexcept { return static_cast<bool>(rate_bound_); }

    /// z = sup_{t in [t0,t1]} |w'(t)|.
    [[nodiscard]] double rate_bound(double t0, double t1) const;

    [[nodiscard]] static DisturbanceSignal constant(const Vec& w);
    /// w_j(t) = offset_j + amplitude_j sin(omega_j t + phase_j), exact rate bound.
    [[nodiscard]] static DisturbanceSignal sinusoid(const Vec& offset, const Vec& amplitude, const Vec& omega,
                                                    const Vec& phase);
    /// Sup of |A w cos(w t + p)| over [t0, t1]; exposed for composite signals.
    [[nodiscard]] static double sinusoid_rate_sup(double amplitude, double omega, double phase, double t0,
                                                  double t1);

private:
    ValueFn value_;
    ValueFn derivative_;
    RateBoundFn rate_bound_;
    int dim_ = 0;
    BoxSet bounds_;
};

/// Classical RK4 with step tau/substeps and u held constant over [t0, t0+tau].
/// Throws IntegrationDiverged on a non-finite state.
[[nodiscard]] Vec integrate_hold(const PlantModel& plant, const Vec& x0, const Vec& u, const DisturbanceSignal& w,
                                 double t0, double tau, int substeps);

/// h(u,w) = g(x_ss(u,w), w); throws InputOutOfRange if u is outside the input set.
[[nodiscard]] Vec steady_output(const PlantModel& plant, const Vec& u, const Vec& w);

struct LyapunovProbeOptions {
    int trials = 100;
    std::uint64_t seed = 1;
    double duration = 5.0;       ///< simulated time per trial
    int checkpoints = 50;        ///< points per trial where V' is evaluated
    int substeps = 20;           ///< RK4 substeps between checkpoints
    double state_spread = 1.0;   ///< scale of random initial offsets from x_ss
    double fd_step = 1e-5;       ///< relative step for the directional derivative
    double tolerance = 1e-6;     ///< violation if margin > tolerance * (1 + V)
};

struct LyapunovProbeReport {
    long samples = 0;
    long violations = 0;
    double worst_margin = -std::numeric_limits<double>::infinity();  ///< max of V' + mu V - sigma_c(|w'|)
};

/// Empirical check of  V' <= -mu V + sigma_c(|w'|)  along constant-input trajectories.
[[nodiscard]] LyapunovProbeReport probe_lyapunov_decay(const PlantModel& plant, const LyapunovCertificate& cert,
                                                       const LyapunovFn& V, const DisturbanceSignal& w,
                                                       const LyapunovProbeOptions& options = {});

/// Random-pair estimate of the Lipschitz constant of x -> g(x,w).
[[nodiscard]] double estimate_output_lipschitz(const PlantModel& plant, const Vec& w, const Vec& x_center,
                                               double spread, int pairs, std::uint64_t seed);

/// Random-pair estimate of the Lipschitz constant of u -> x_ss(u,w) over the input set.
[[nodiscard]] double estimate_steady_state_lipschitz(const PlantModel& plant, const Vec& w, int pairs,
                                                     std::uint64_t seed);

/// Largest |f(x_ss(u,w),u,w)| over random (u,w) drawn from the input and disturbance boxes.
[[nodiscard]] double max_steady_state_residual(const PlantModel& plant, int probes, std::uint64_t seed);

}  // namespace fes
