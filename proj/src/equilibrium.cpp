#include "fes/equilibrium.hpp"

#include "fes/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace fes {

void EquilibriumProblem::validate() const {
    if (input_dim <= 0) {
        throw Error(ErrorCode::InvalidArgument, "equilibrium problem needs n_u > 0");
    }
    if (!F || !resolvent) {
        throw Error(ErrorCode::InvalidArgument, "equilibrium problem is missing F or its resolvent");
    }
    if (!(strong_monotonicity > 0.0 && lipschitz_F > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "m and ell must be positive");
    }
    if (strong_monotonicity > lipschitz_F * (1.0 + 1e-12)) {
        throw Error(ErrorCode::InvalidArgument, "strong monotonicity exceeds the Lipschitz constant");
    }
    if (!(lipschitz_solution >= 0.0 && lipschitz_F_output >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "Lipschitz constants must be nonnegative");
    }
}

ResolventFn identity_resolvent() {
    return [](const Vec& v, double) { return v; };
}

ResolventFn box_resolvent(const BoxSet& box) {
    return [box](const Vec& v, double) { return box.project(v); };
}

PseudoGradientFn fo_pseudo_gradient(GradientFn grad_u_phi1, GradientFn grad_y_phi1, JacobianFn jac_h_u, int n_u,
                                    int n_y) {
    return [=](const Vec& u, const Vec& y) -> Vec {
        require_size(u, n_u, "fo_pseudo_gradient u");
        require_size(y, n_y, "fo_pseudo_gradient y");
        const Vec gu = grad_u_phi1(u, y);
        const Vec gy = grad_y_phi1(u, y);
        const Mat J = jac_h_u(u);
        require_size(gu, n_u, "grad_u phi1");
        require_size(gy, n_y, "grad_y phi1");
        if (J.rows() != n_y || J.cols() != n_u) {
            throw Error(ErrorCode::ShapeError, "jac_h_u must be n_y x n_u");
        }
        return gu + J.transpose() * gy;
    };
}

// ---------------------------------------------------------------------------
// GamePartition

int GamePartition::input_dim() const { return std::accumulate(agent_dims.begin(), agent_dims.end(), 0); }

int GamePartition::output_dim() const { return std::accumulate(output_dims.begin(), output_dims.end(), 0); }

int GamePartition::input_offset(int agent) const {
    return std::accumulate(agent_dims.begin(), agent_dims.begin() + agent, 0);
}

int GamePartition::output_offset(int agent) const {
    return std::accumulate(output_dims.begin(), output_dims.begin() + agent, 0);
}

BoxSet GamePartition::joint_box() const {
    const int n = input_dim();
    Vec lo(n), hi(n);
    for (int i = 0; i < agents(); ++i) {
        lo.segment(input_offset(i), agent_dims[i]) = boxes[i].lower;
        hi.segment(input_offset(i), agent_dims[i]) = boxes[i].upper;
    }
    return BoxSet(lo, hi);
}

void GamePartition::validate() const {
    if (agent_dims.empty()) {
        throw Error(ErrorCode::InvalidArgument, "game needs at least one agent");
    }
    if (output_dims.size() != agent_dims.size() || boxes.size() != agent_dims.size()) {
        throw Error(ErrorCode::ShapeError, "partition blocks disagree on the number of agents");
    }
    for (int i = 0; i < agents(); ++i) {
        if (agent_dims[i] <= 0 || output_dims[i] < 0) {
            throw Error(ErrorCode::ShapeError, "agent block sizes must be positive");
        }
        if (boxes[i].size() != agent_dims[i]) {
            throw Error(ErrorCode::ShapeError, "box of agent " + std::to_string(i) + " has the wrong size");
        }
    }
}

PseudoGradientFn game_pseudo_gradient(const GamePartition& partition, std::vector<AgentGradientFn> grad_ui_Ji,
                                      std::vector<AgentGradientFn> grad_yi_Ji, std::vector<AgentJacobianFn> jac_hi) {
    partition.validate();
    const auto n = static_cast<std::size_t>(partition.agents());
    if (grad_ui_Ji.size() != n || grad_yi_Ji.size() != n || jac_hi.size() != n) {
        throw Error(ErrorCode::ShapeError, "one gradient/Jacobian per agent is required");
    }
    return [partition, gu = std::move(grad_ui_Ji), gy = std::move(grad_yi_Ji),
            jh = std::move(jac_hi)](const Vec& u, const Vec& y) -> Vec {
        require_size(u, partition.input_dim(), "game_pseudo_gradient u");
        require_size(y, partition.output_dim(), "game_pseudo_gradient y");
        Vec F(u.size());
        for (int i = 0; i < partition.agents(); ++i) {
            const int ni = partition.agent_dims[i];
            const int nyi = partition.output_dims[i];
            const Vec ui = u.segment(partition.input_offset(i), ni);
            const Vec g_u = gu[i](ui, y);
            const Vec g_y = gy[i](ui, y);
            const Mat J = jh[i](ui);
            require_size(g_u, ni, "grad_{u_i} J_i");
            require_size(g_y, nyi, "grad_{y_i} J_i");
            if (J.rows() != nyi || J.cols() != ni) {
                throw Error(ErrorCode::ShapeError, "agent Jacobian has the wrong shape");
            }
            F.segment(partition.input_offset(i), ni) = g_u + J.transpose() * g_y;
        }
        return F;
    };
}

IntervalDistance dist_to_interval_grad(double y, double lo, double hi) {
    if (lo > hi) {
        throw Error(ErrorCode::InvalidInterval, "lower end exceeds upper end");
    }
    if (y > hi) {
        const double d = y - hi;
        return {0.5 * d * d, d};
    }
    if (y < lo) {
        const double d = y - lo;
        return {0.5 * d * d, d};
    }
    return {0.0, 0.0};
}

// ---------------------------------------------------------------------------
// Offline solver

OfflineSolution solve_offline(const EquilibriumProblem& problem, const SteadyMapFn& h, double gamma, double tol,
                              int max_iters, const Vec& u_init, const std::function<void(const Vec&)>& on_iterate) {
    if (!(gamma > 0.0)) {
        throw Error(ErrorCode::StepSizeOutOfRange, "solve_offline needs gamma > 0");
    }
    OfflineSolution sol;
    sol.u = u_init;
    for (int it = 1; it <= max_iters; ++it) {
        const Vec next = problem.resolvent(sol.u - gamma * problem.F(sol.u, h(sol.u)), gamma);
        sol.last_step = (next - sol.u).norm();
        sol.u = next;
        sol.iterations = it;
        if (on_iterate) {
            on_iterate(sol.u);
        }
        if (!std::isfinite(sol.last_step)) {
            throw Error(ErrorCode::NoConvergence, "iterates became non-finite");
        }
        if (sol.last_step <= tol) {
            return sol;
        }
    }
    throw Error(ErrorCode::NoConvergence, "no convergence after " + std::to_string(max_iters) +
                                              " iterations (last step " + std::to_string(sol.last_step) + ")");
}

double fixed_point_residual(const EquilibriumProblem& problem, const SteadyMapFn& h, double gamma, const Vec& u) {
    return (u - problem.resolvent(u - gamma * problem.F(u, h(u)), gamma)).norm();
}

MonotonicityProbe probe_monotonicity(const EquilibriumProblem& problem, const SteadyMapFn& h, const BoxSet& box,
                                     int pairs, std::uint64_t seed) {
    Rng rng(seed);
    MonotonicityProbe probe{std::numeric_limits<double>::infinity(), 0.0};
    for (int i = 0; i < pairs; ++i) {
        const Vec a = sample_box(box, rng);
        const Vec b = sample_box(box, rng);
        const Vec d = a - b;
        const double dn2 = d.squaredNorm();
        if (dn2 == 0.0) {
            continue;
        }
        const Vec dF = problem.F(a, h(a)) - problem.F(b, h(b));
        probe.min_ratio = std::min(probe.min_ratio, dF.dot(d) / dn2);
        probe.max_ratio = std::max(probe.max_ratio, dF.norm() / std::sqrt(dn2));
    }
    return probe;
}

}  // namespace fes
