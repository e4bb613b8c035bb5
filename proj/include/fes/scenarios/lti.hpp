#pragma once

#include "fes/algorithms.hpp"
#include "fes/certificates.hpp"
#include "fes/equilibrium.hpp"
#include "fes/plant.hpp"
#include "fes/random.hpp"
#include "fes/simulator.hpp"

namespace fes::scenarios {

/// Diagonal-capacitance linear plant
///   cap .* x' = -L x + B u + E w,   y = Cout x,
/// with L symmetric positive definite.
struct LtiSystem {
    Vec cap;
    Mat L, B, E, Cout;
    BoxSet input_box;
    BoxSet disturbance_box;

    [[nodiscard]] int n_x() const { return static_cast<int>(L.rows()); }
    [[nodiscard]] int n_u() const { return static_cast<int>(B.cols()); }
    [[nodiscard]] int n_w() const { return static_cast<int>(E.cols()); }
    [[nodiscard]] int n_y() const { return static_cast<int>(Cout.rows()); }
    /// A = -diag(cap)^-1 L.
    [[nodiscard]] Mat A() const;
    void validate() const;
};

/// phi1(u, y) = 0.5 u'Hu + q'u + 0.5 |y - y_ref|^2_R  over the input box.
struct QuadraticCost {
    Mat H;
    Vec q;
    Mat R;
    Vec y_ref;
};

/// x' = a x + b u + e w,  y = c x  (a < 0), input box [u_lo, u_hi], w box [-1e3, 1e3].
[[nodiscard]] LtiSystem scalar_lti(double a, double b, double c, double e = 0.0, double u_lo = -1e3,
                                   double u_hi = 1e3);

[[nodiscard]] PlantModel lti_plant(const LtiSystem& sys);

/// mu = lambda_min(diag(cap)^-1 L), V = dx' diag(cap) dx, sigma_c(z) = |cap^1/2 L^-1 E|^2 z^2 / mu.
[[nodiscard]] LyapunovCertificate lti_certificate(const LtiSystem& sys);
[[nodiscard]] LyapunovFn lti_lyapunov(const LtiSystem& sys);

/// Exact zero-order-hold map for w frozen at w(t^k).
[[nodiscard]] DiscreteStepFn lti_exact_step(const LtiSystem& sys, double tau);

/// Feedback-optimization problem with exact constants (m, ell from H + D'RD, D = Cout L^-1 B).
[[nodiscard]] EquilibriumProblem lti_fo_problem(const LtiSystem& sys, const QuadraticCost& cost);

/// Unconstrained minimizer of the cost at disturbance w, by a direct linear solve.
[[nodiscard]] Vec lti_unconstrained_optimum(const LtiSystem& sys, const QuadraticCost& cost, const Vec& w);

struct LtiScenario {
    LtiSystem sys;
    QuadraticCost cost;
    PlantModel plant;
    EquilibriumProblem problem;
    LyapunovCertificate cert;
    LyapunovFn V;
    double step_gamma = 0.0;
    AlgorithmOperator op;
    CertificateBundle bundle;
};

/// step_gamma <= 0 selects m / ell^2.
[[nodiscard]] LtiScenario build_lti_scenario(const LtiSystem& sys, const QuadraticCost& cost,
                                             double step_gamma = 0.0);

struct RandomLtiOptions {
    int max_states = 4;
    int max_inputs = 3;
    int max_disturbances = 2;
    int max_outputs = 3;
    double box_half_width = 20.0;
};

[[nodiscard]] std::pair<LtiSystem, QuadraticCost> random_lti(Rng& rng, const RandomLtiOptions& opt = {});

/// Random instance together with a certified (tau, eps) and a sinusoidal disturbance.
struct CertifiedLtiInstance {
    LtiScenario scenario;
    double tau = 0.0;
    double eps = 1.0;
    DisturbanceSignal w;
    Vec u0;
    Vec x0;
};

[[nodiscard]] CertifiedLtiInstance random_certified_lti(Rng& rng, const RandomLtiOptions& opt = {});

}  // namespace fes::scenarios
