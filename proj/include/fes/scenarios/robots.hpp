#pragma once

#include "fes/algorithms.hpp"
#include "fes/certificates.hpp"
#include "fes/equilibrium.hpp"
#include "fes/plant.hpp"

#include <vector>

namespace fes::scenarios {

/// N unicycles steered to position commands, playing
///   J_i = |u_i - rbar_i|^2 + coupling * sum_j |r_i - r_j|^2  over box U_i.
struct RobotScenario {
    std::vector<Eigen::Vector2d> targets{{4.0, 0.0}, {-4.0, 0.0}, {0.0, 4.0}, {0.0, -4.0}};
    double k1 = 1.0;
    double k2 = 0.5;
    double coupling = 0.25;
    Eigen::Vector2d box_lower{-5.0, -6.0};
    Eigen::Vector2d box_upper{10.0, 6.0};
    double tau = 0.5;
    double eps = 1.0;
    /// Start positions and headings; empty = at the origin facing +x.
    std::vector<Eigen::Vector2d> start_positions;
    std::vector<double> start_headings;

    [[nodiscard]] int agents() const { return static_cast<int>(targets.size()); }
    void validate() const;
};

struct RobotSetup {
    PlantModel plant;
    EquilibriumProblem problem;
    AlgorithmOperator op;
    GamePartition partition;
    CertificateBundle bundle;   ///< nominal inner-loop constants, see robots.cpp
    DisturbanceSignal w;        ///< stacked targets, constant
    Vec x0;
    Vec u0;
    double oracle_gamma = 0.0;  ///< prox-gradient step used by the offline oracle
};

[[nodiscard]] RobotSetup build_robots(const RobotScenario& scn);

/// Closed-form equilibrium u_i = (rbar_i + c sum_j rbar_j) / (1 + c N), valid while the box is inactive.
/// Returned unclamped so callers can check box activity.
[[nodiscard]] Vec robot_unconstrained_ne(const RobotScenario& scn);

/// Heading error toward the commanded point, wrapped to (-pi, pi].
[[nodiscard]] double heading_error(double a, double b, double theta, const Eigen::Vector2d& cmd);

}  // namespace fes::scenarios
