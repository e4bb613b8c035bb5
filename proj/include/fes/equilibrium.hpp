#pragma once

#include "fes/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace fes {

/// Single-valued part F(u, y) of the generalized equation 0 in F(u,y) + B(u).
using PseudoGradientFn = std::function<Vec(const Vec& u, const Vec& y)>;
/// Resolvent of B: prox of gamma*phi2, or the projection onto the input set.
using ResolventFn = std::function<Vec(const Vec& v, double gamma)>;
/// Steady-state map u -> h(u, w) with the disturbance frozen.
using SteadyMapFn = std::function<Vec(const Vec& u)>;

using GradientFn = std::function<Vec(const Vec& u, const Vec& y)>;
using JacobianFn = std::function<Mat(const Vec& u)>;

/// 0 in F(u,y) + B(u),  y = h(u,w).
///
/// B is carried only through its resolvent. The constants describe the
/// reduced map F~(u) = F(u, h(u,w)) uniformly in w.
struct EquilibriumProblem {
    int input_dim = 0;
    PseudoGradientFn F;
    ResolventFn resolvent;
    double lipschitz_F = 0.0;          ///< ell: Lipschitz constant of F~
    double strong_monotonicity = 0.0;  ///< m: strong monotonicity modulus of F~
    double lipschitz_solution = 0.0;   ///< ell_{u*}: Lipschitz constant of w -> u*(w)
    double lipschitz_F_output = 0.0;   ///< Lipschitz constant of y -> F(u,y)

    void validate() const;
};

[[nodiscard]] ResolventFn identity_resolvent();
[[nodiscard]] ResolventFn box_resolvent(const BoxSet& box);

/// F(u,y) = grad_u phi1(u,y) + Jh_u(u)^T grad_y phi1(u,y).
/// The returned map throws ShapeError when the pieces disagree on dimensions.
[[nodiscard]] PseudoGradientFn fo_pseudo_gradient(GradientFn grad_u_phi1, GradientFn grad_y_phi1,
                                                  JacobianFn jac_h_u, int n_u, int n_y);

/// Block structure of a game: agent i owns input block i and output block i.
struct GamePartition {
    std::vector<int> agent_dims;
    std::vector<int> output_dims;
    std::vector<BoxSet> boxes;

    [[nodiscard]] int agents() const noexcept { return static_cast<int>(agent_dims.size()); }
    [[nodiscard]] int input_dim() const;
    [[nodiscard]] int output_dim() const;
    [[nodiscard]] int input_offset(int agent) const;
    [[nodiscard]] int output_offset(int agent) const;
    [[nodiscard]] BoxSet joint_box() const;
    void validate() const;
};

/// Per-agent pieces take the agent's own input block and the full output vector.
using AgentGradientFn = std::function<Vec(const Vec& u_i, const Vec& y)>;
/// d y_i / d u_i, sized output_dims[i] x agent_dims[i].
using AgentJacobianFn = std::function<Mat(const Vec& u_i)>;

/// Pseudo-gradient F = [F_i],  F_i = grad_{u_i} J_i + (d h_i/d u_i)^T grad_{y_i} J_i.
[[nodiscard]] PseudoGradientFn game_pseudo_gradient(const GamePartition& partition,
                                                    std::vector<AgentGradientFn> grad_ui_Ji,
                                                    std::vector<AgentGradientFn> grad_yi_Ji,
                                                    std::vector<AgentJacobianFn> jac_hi);

struct IntervalDistance {
    double value;     ///< 0.5 dist(y, [lo,hi])^2
    double gradient;  ///< d/dy of value
};

[[nodiscard]] IntervalDistance dist_to_interval_grad(double y, double lo, double hi);

struct OfflineSolution {
    Vec u;
    int iterations = 0;
    double last_step = 0.0;  ///< |u_{k+1} - u_k| at exit
};

/// Fixed-point iteration u <- R(u - gamma F(u, h(u)), gamma) until the step
/// falls below tol. Throws NoConvergence after max_iters.
/// on_iterate, when set, sees every iterate after u_init.
[[nodiscard]] OfflineSolution solve_offline(const EquilibriumProblem& problem, const SteadyMapFn& h, double gamma,
                                            double tol, int max_iters, const Vec& u_init,
                                            const std::function<void(const Vec&)>& on_iterate = {});

/// Residual |u - R(u - gamma F(u, h(u)), gamma)|.
[[nodiscard]] double fixed_point_residual(const EquilibriumProblem& problem, const SteadyMapFn& h, double gamma,
                                          const Vec& u);

struct MonotonicityProbe {
    double min_ratio;  ///< min over pairs of <F~(u)-F~(v), u-v> / |u-v|^2
    double max_ratio;  ///< max over pairs of |F~(u)-F~(v)| / |u-v|
};

/// Random-pair probe of strong monotonicity and Lipschitz continuity of F~ over a box.
[[nodiscard]] MonotonicityProbe probe_monotonicity(const EquilibriumProblem& problem, const SteadyMapFn& h,
                                                   const BoxSet& box, int pairs, std::uint64_t seed);

}  // namespace fes
