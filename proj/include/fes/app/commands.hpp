#pragma once

#include "fes/app/config.hpp"
#include "fes/simulator.hpp"

#include <iosfwd>
#include <optional>

namespace fes::app {

enum ExitCode : int { kOk = 0, kNotCertified = 1, kConfigFailure = 2, kDiverged = 3 };

/// Everything a command needs, built from a RunConfig with overrides applied.
struct Instance {
    ScenarioKind kind = ScenarioKind::Building;
    PlantModel plant;
    EquilibriumProblem problem;
    AlgorithmOperator op;
    CertificateBundle bundle;
    LyapunovFn V;  ///< empty for the robots
    DisturbanceSignal w;
    double oracle_gamma = 0.0;
    double tau = 0.0;
    double eps = 1.0;
    long horizon = 0;
    int substeps = 20;
    bool log_intersample = false;
    Vec x0, u0;
    std::optional<scenarios::BuildingSetup> building;

    [[nodiscard]] ClosedLoopConfig loop_config() const;
    [[nodiscard]] Instrumentation instrumentation(const SolutionOracle& oracle) const;
};

/// Throws fes::Error when the scenario parameters are inconsistent.
[[nodiscard]] Instance make_instance(const RunConfig& cfg);

/// Worker count for sweeps: FES_LAB_WORKERS when set, else the hardware concurrency.
[[nodiscard]] int sweep_workers();

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_certify(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace fes::app
