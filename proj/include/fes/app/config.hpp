#pragma once

#include "fes/scenarios/building.hpp"
#include "fes/scenarios/lti.hpp"
#include "fes/scenarios/robots.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fes::app {

inline constexpr int kSchemaVersion = 1;

enum class ScenarioKind { Building, Robots, Custom };

[[nodiscard]] const char* to_string(ScenarioKind kind) noexcept;

/// A user-supplied LTI plant with a quadratic cost.
struct CustomScenario {
    scenarios::LtiSystem sys;
    scenarios::QuadraticCost cost;
    double step_gamma = 0.0;  ///< <= 0 selects m / ell^2
    bool disturbance_sinusoid = false;
    Vec w_offset, w_amplitude, w_omega, w_phase;  ///< constant w uses w_offset only
    Vec x0, u0;                                   ///< empty = zero
};

struct SweepSpec {
    std::vector<double> tau;
    std::vector<double> eps;
    bool simulate = false;
    double divergence_ratio = 1e6;  ///< |du| growth over the run that counts as divergence
};

struct RunConfig {
    ScenarioKind scenario = ScenarioKind::Building;
    std::optional<double> tau, eps;
    std::optional<long> horizon;
    int substeps = 20;
    std::optional<std::uint64_t> seed;
    bool log_intersample = false;
    std::string output_dir = "out";
    bool plot = false;
    SweepSpec sweep;

    scenarios::BuildingScenario building;
    scenarios::RobotScenario robots;
    long robots_horizon = 60;
    CustomScenario custom;
    long custom_horizon = 0;
};

/// Parses the JSON document. Unknown keys, wrong types and a missing or
/// different schema_version throw ConfigError.
[[nodiscard]] RunConfig parse_config(const std::string& json_text);
[[nodiscard]] RunConfig load_config(const std::string& path);

/// Grid spec: an explicit list, or {"from", "to", "count", "log"}.
[[nodiscard]] std::vector<double> make_grid(double from, double to, int count, bool log_spaced);

}  // namespace fes::app
