#pragma once

#include "fes/algorithms.hpp"
#include "fes/certificates.hpp"
#include "fes/equilibrium.hpp"
#include "fes/plant.hpp"
#include "fes/types.hpp"

#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace fes {

struct ClosedLoopConfig {
    double tau = 0.0;
    double eps = 1.0;
    long horizon = 0;     ///< number of samples K; rows k = 0..K are logged
    int substeps = 50;    ///< RK4 steps per sampling period
    Vec u0;
    Vec x0;
    bool log_intersample = false;  ///< record the output at every RK4 substep

    void validate(const PlantModel& plant) const;
};

/// u*(w) with a warm start (empty warm start = input-set midpoint).
using SolutionOracle = std::function<Vec(const Vec& w, const Vec& warm)>;

/// Oracle backed by solve_offline on y = h(u, w).
[[nodiscard]] SolutionOracle make_offline_oracle(const PlantModel& plant, const EquilibriumProblem& problem,
                                                 double step_gamma, double tol = 1e-10, int max_iters = 1000000);

/// Optional extras computed along a run.
struct Instrumentation {
    SolutionOracle oracle;              ///< fills u*, y*, du, dy
    LyapunovFn lyapunov;                ///< fills W = sqrt(V(x^k, u^k, w^k))
    const CertificateBundle* bundle = nullptr;  ///< fills the ISS envelope when (tau, eps) is certified
};

struct SampleRecord {
    long k = 0;
    double t = 0.0;
    Vec x, u, y, w;
    double z = 0.0;       ///< sup |w'| over [t^k, t^k + tau]
    Vec u_star, y_star;   ///< empty without an oracle
    Vec dx, du, dy;       ///< du, dy empty without an oracle
    double W = std::numeric_limits<double>::quiet_NaN();
    double envelope = std::numeric_limits<double>::quiet_NaN();
};

struct DenseRecord {
    double t = 0.0;
    Vec x, u, y, w;
};

/// Row k holds t^k, the state x^k reached under u^{k-1}, the input u^k
/// computed from y^k = g(x^k, w^k) and held over [t^k, t^{k+1}).
struct TrajectoryLog {
    int n_x = 0;
    int n_u = 0;
    int n_y = 0;
    int n_w = 0;
    double tau = 0.0;
    double eps = 1.0;
    std::vector<SampleRecord> samples;
    std::vector<DenseRecord> dense;

    [[nodiscard]] std::vector<std::string> csv_header() const;
    /// Samples and dense rows (k = -1) merged in time order.
    void write_csv(std::ostream& out) const;
    [[nodiscard]] std::string to_csv() const;
};

/// Discrete plant map psi: x^{k+1} from x^k under u^k held over [t^k, t^{k+1}).
using DiscreteStepFn = std::function<Vec(const Vec& x, const Vec& u, const DisturbanceSignal& w, long k)>;

/// x^{k+1} = psi(x^k, u^k),  u^{k+1} = (1-eps) u^k + eps T(u^k, g(x^{k+1}, w^{k+1})).
/// Throws IntegrationDiverged (with the sample index) on a non-finite state.
[[nodiscard]] TrajectoryLog run_discrete(const PlantModel& plant, const DiscreteStepFn& psi,
                                         const AlgorithmOperator& op, const DisturbanceSignal& w,
                                         const ClosedLoopConfig& cfg, const Instrumentation& instr = {});

/// Sampled-data loop: RK4 under zero-order hold between samples.
[[nodiscard]] TrajectoryLog run_sampled_data(const PlantModel& plant, const AlgorithmOperator& op,
                                             const DisturbanceSignal& w, const ClosedLoopConfig& cfg,
                                             const Instrumentation& instr = {});

/// psi built from integrate_hold.
[[nodiscard]] DiscreteStepFn rk4_step(const PlantModel& plant, double tau, int substeps);

/// Applies u^k = u*(w_measured(t^k)) while the plant sees w_true.
/// The log's oracle columns (from instr) refer to w_true.
[[nodiscard]] TrajectoryLog run_feedforward_baseline(const PlantModel& plant, const SolutionOracle& feedforward,
                                                     const DisturbanceSignal& w_measured,
                                                     const DisturbanceSignal& w_true, const ClosedLoopConfig& cfg,
                                                     const Instrumentation& instr = {});

/// Runs an arbitrary sampled policy u^k = policy(k, t^k, x^k, y^k, u^{k-1}) under zero-order hold.
using SampledPolicy = std::function<Vec(long k, double t, const Vec& x, const Vec& y, const Vec& u_prev)>;
[[nodiscard]] TrajectoryLog run_policy(const PlantModel& plant, const SampledPolicy& policy,
                                       const DisturbanceSignal& w, const ClosedLoopConfig& cfg,
                                       const Instrumentation& instr = {});

struct Lemma1Report {
    long checked = 0;
    long violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();  ///< min of RHS - LHS
};

/// Checks W(x^{k+1},u^k,w^{k+1}) <= c_W W(x^k,u^{k-1},w^k) + c_W ell_W |u^k - u^{k-1}| + sqrt(tau) sigma(z^k)
/// on every consecutive pair of rows (u^{-1} := u^0). Violations allow a relative slack of `tol`.
[[nodiscard]] Lemma1Report check_lemma1(const TrajectoryLog& log, const CertificateBundle& bundle,
                                        const LyapunovFn& V, double tol = 1e-9);

struct IssReport {
    long checked = 0;
    long envelope_violations = 0;
    double worst_envelope_margin = std::numeric_limits<double>::infinity();  ///< min of envelope - |(dx,du)|
    double tail_dy_max = 0.0;
    double tail_z_max = 0.0;
    double tail_gain_bound = 0.0;  ///< gamma_a(tail_z_max)
    bool tail_ok = false;

    [[nodiscard]] bool ok() const noexcept { return envelope_violations == 0 && tail_ok; }
};

/// Pointwise envelope check plus the asymptotic-gain check on the last 20% of rows.
/// Requires oracle columns; throws OutsideCertifiedRegion for uncertified (tau, eps).
[[nodiscard]] IssReport check_iss(const TrajectoryLog& log, const CertificateBundle& bundle, double tau, double eps,
                                  double slack = 1e-6);

/// Index of the first row in the tail window (last 20% of rows, at least one row).
[[nodiscard]] std::size_t tail_start(std::size_t rows) noexcept;

}  // namespace fes
