#include "fes/algorithms.hpp"

#include <cmath>
#include <string>

namespace fes {

double AlgorithmOperator::lambda_min_P() const {
    Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double AlgorithmOperator::lambda_max_P() const {
    Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

void AlgorithmOperator::validate() const {
    if (!step) {
        throw Error(ErrorCode::InvalidArgument, "operator has no step function");
    }
    if (!(c_T >= 0.0 && c_T < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "c_T must lie in [0, 1)");
    }
    if (!(ell_T >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "ell_T must be nonnegative");
    }
    if (P.rows() != P.cols() || P.rows() == 0) {
        throw Error(ErrorCode::ShapeError, "P must be square");
    }
    if (!P.isApprox(P.transpose(), 1e-12) || lambda_min_P() <= 0.0) {
        throw Error(ErrorCode::InvalidArgument, "P must be symmetric positive definite");
    }
}

double prox_grad_contraction(double m, double ell, double step_gamma) {
    return std::sqrt(std::max(0.0, 1.0 - step_gamma * (2.0 * m - step_gamma * ell * ell)));
}

AlgorithmOperator prox_grad_operator(const EquilibriumProblem& problem, double step_gamma) {
    problem.validate();
    const double m = problem.strong_monotonicity;
    const double ell = problem.lipschitz_F;
    const double upper = 2.0 * m / (ell * ell);
    if (!(step_gamma > 0.0 && step_gamma < upper)) {
        throw Error(ErrorCode::StepSizeOutOfRange,
                    "gamma = " + std::to_string(step_gamma) + " outside (0, " + std::to_string(upper) + ")");
    }
    AlgorithmOperator op;
    op.step = [F = problem.F, R = problem.resolvent, step_gamma](const Vec& u, const Vec& y) {
        return R(u - step_gamma * F(u, y), step_gamma);
    };
    op.c_T = prox_grad_contraction(m, ell, step_gamma);
    op.ell_T = step_gamma * problem.lipschitz_F_output;
    op.P = Mat::Identity(problem.input_dim, problem.input_dim);
    return op;
}

AlgorithmOperator best_response_operator(const GamePartition& partition, std::vector<LocalSolverFn> local_solvers,
                                         double c_T, double ell_T) {
    partition.validate();
    if (local_solvers.size() != static_cast<std::size_t>(partition.agents())) {
        throw Error(ErrorCode::ShapeError, "one local solver per agent is required");
    }
    AlgorithmOperator op;
    op.step = [partition, solvers = std::move(local_solvers)](const Vec& u, const Vec& y) -> Vec {
        require_size(u, partition.input_dim(), "best response u");
        Vec next(u.size());
        for (int i = 0; i < partition.agents(); ++i) {
            Vec ui = solvers[i](y);
            if (ui.size() != partition.agent_dims[i] || !ui.allFinite()) {
                throw Error(ErrorCode::BestResponseFailed, "agent " + std::to_string(i) + " returned no solution");
            }
            next.segment(partition.input_offset(i), partition.agent_dims[i]) = ui;
        }
        return next;
    };
    op.c_T = c_T;
    op.ell_T = ell_T;
    op.P = Mat::Identity(partition.input_dim(), partition.input_dim());
    return op;
}

double relaxed_contraction(double c_T, double eps) { return 1.0 - eps * (1.0 - c_T); }

Vec relaxed_step(const AlgorithmOperator& op, double eps, const Vec& u, const Vec& y) {
    if (!(eps > 0.0 && eps <= 1.0)) {
        throw Error(ErrorCode::RelaxationOutOfRange, "eps must lie in (0, 1]");
    }
    if (eps == 1.0) {
        return op.step(u, y);
    }
    return (1.0 - eps) * u + eps * op.step(u, y);
}

Vec projected_gradient_argmin(const std::function<Vec(const Vec&)>& gradient, const BoxSet& box, double lipschitz,
                              const Vec& start, double tol, int max_iters) {
    if (!(lipschitz > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "projected gradient needs a positive Lipschitz constant");
    }
    const double step = 1.0 / lipschitz;
    Vec x = box.project(start);
    for (int it = 0; it < max_iters; ++it) {
        const Vec next = box.project(x - step * gradient(x));
        const double moved = (next - x).norm();
        x = next;
        if (!x.allFinite()) {
            break;
        }
        if (moved <= tol) {
            return x;
        }
    }
    throw Error(ErrorCode::BestResponseFailed, "local solver hit its iteration cap");
}

}  // namespace fes
