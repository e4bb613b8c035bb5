#pragma once

#include "fes/equilibrium.hpp"
#include "fes/types.hpp"

#include <functional>
#include <vector>

namespace fes {

using IterationFn = std::function<Vec(const Vec& u, const Vec& y)>;

/// Iteration rule u+ = T(u, y) with the data needed by the small-gain certificate.
struct AlgorithmOperator {
    IterationFn step;
    double c_T = 0.0;   ///< contraction factor of T~ in the P-norm, in [0, 1)
    double ell_T = 0.0; ///< Lipschitz constant of y -> T(u, y)
    Mat P;              ///< contraction metric, symmetric positive definite

    [[nodiscard]] Vec operator()(const Vec& u, const Vec& y) const { return step(u, y); }
    [[nodiscard]] double lambda_min_P() const;
    [[nodiscard]] double lambda_max_P() const;
    void validate() const;
};

/// c_T = sqrt(1 - gamma (2 m - gamma ell^2)).
[[nodiscard]] double prox_grad_contraction(double m, double ell, double step_gamma);

/// T(u,y) = R(u - gamma F(u,y), gamma). Requires gamma in (0, 2m/ell^2).
[[nodiscard]] AlgorithmOperator prox_grad_operator(const EquilibriumProblem& problem, double step_gamma);

/// Local best response of one agent: all measurements -> argmin over its own box.
using LocalSolverFn = std::function<Vec(const Vec& y)>;

/// Simultaneous (Jacobi) best response T = [T_i(y)].
[[nodiscard]] AlgorithmOperator best_response_operator(const GamePartition& partition,
                                                       std::vector<LocalSolverFn> local_solvers, double c_T,
                                                       double ell_T);

/// phi(eps) = 1 - eps (1 - c_T).
[[nodiscard]] double relaxed_contraction(double c_T, double eps);

/// (1 - eps) u + eps T(u, y).
[[nodiscard]] Vec relaxed_step(const AlgorithmOperator& op, double eps, const Vec& u, const Vec& y);

/// Bounded projected-gradient minimizer for a strongly convex local cost.
/// Throws BestResponseFailed when the cap is hit.
[[nodiscard]] Vec projected_gradient_argmin(const std::function<Vec(const Vec&)>& gradient, const BoxSet& box,
                                            double lipschitz, const Vec& start, double tol = 1e-10,
                                            int max_iters = 100000);

}  // namespace fes
