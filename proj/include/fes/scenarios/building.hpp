#pragma once

#include "fes/algorithms.hpp"
#include "fes/certificates.hpp"
#include "fes/equilibrium.hpp"
#include "fes/plant.hpp"
#include "fes/scenarios/occupancy.hpp"
#include "fes/simulator.hpp"

#include <cstdint>
#include <vector>

namespace fes::scenarios {

/// Reduced single-story office: rooms in a row, each with an exterior wall of
/// `wall_layers` nodes, a window to ambient, and a floor to ground.
/// Time in hours, temperatures in degC, heat flows in W, capacities in Wh/K.
///
/// States:  rooms, then wall layers (room-major, inside to outside).
/// Inputs:  radiator fraction per room, AHU air flow, AHU heating, AHU cooling, all in [0, 1].
/// Disturbances: solar irradiance [W/m^2], ambient, ground, occupant gain per room [W].
/// Outputs: room temperatures, ambient, ground.
struct BuildingScenario {
    int rooms = 5;
    int wall_layers = 2;

    double room_capacity = 100.0;
    double wall_capacity = 300.0;
    double g_room_wall = 60.0;
    double g_wall_wall = 40.0;
    double g_wall_out = 60.0;
    double g_window = 15.0;
    double g_floor = 15.0;
    double g_room_room = 20.0;

    double radiator_area = 20.0;    ///< m^2 per room
    double radiator_max = 50.0;     ///< W/m^2
    double airflow_max = 0.3;       ///< kg/s, split evenly over rooms
    double ahu_heat_max = 1000.0;   ///< W, split evenly over rooms
    double ahu_cool_max = 100.0;    ///< W, split evenly over rooms
    double air_cp = 1005.0;         ///< J/(kg K), i.e. W per (kg/s) per K

    std::vector<double> solar_aperture{1.5, 1.2, 1.05, 1.2, 1.5};  ///< effective m^2 per room
    double solar_peak = 600.0;      ///< W/m^2 at noon, zero outside 6-18 h
    double ambient_mean = 14.0;
    double ambient_amplitude = 6.0;
    double ambient_peak_hour = 15.0;
    double ground_temperature = 10.0;

    int occupants = 15;
    double occupant_watts = 100.0;
    double occupancy_ramp_hours = 0.05;
    WorkdaySchedule schedule;
    std::uint64_t seed = 1;

    double comfort_min = 20.0;
    double comfort_max = 25.0;
    double comfort_backoff = 2.0;   ///< the controller aims inside [min + b, max - b]

    std::vector<double> energy_H{1, 1, 1, 1, 1, 1, 1, 1};
    std::vector<double> energy_c{0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
    double eta = 0.015;

    double nominal_airflow = 0.2;   ///< air-flow fraction where the input sensitivity is linearized
    double nominal_delta_t = -8.0;  ///< ambient minus room temperature at that point

    double initial_temperature = 21.0;
    double tau = 0.05;
    double eps = 1.0;
    double horizon_hours = 24.0;
    double step_gamma = 0.0;        ///< <= 0 selects 1.5 m / ell^2

    [[nodiscard]] int n_x() const { return rooms * (1 + wall_layers); }
    [[nodiscard]] int n_u() const { return rooms + 3; }
    [[nodiscard]] int n_w() const { return rooms + 3; }
    [[nodiscard]] int n_y() const { return rooms + 2; }
    [[nodiscard]] int airflow_index() const { return rooms; }
    [[nodiscard]] long horizon_samples() const;
    void validate() const;
};

/// Matrices of  C x' = -(L0 + s k P) x + B_lin u_lin + B_w w + s k P 1 T_amb,  s = air-flow fraction.
struct BuildingModel {
    Vec cap;
    Mat L0;
    Mat B_lin;   ///< n_x x n_u with a zero air-flow column
    Mat B_w;     ///< n_x x n_w
    Vec room_mask;
    double k_air = 0.0;  ///< W/K per room at full air flow
    int rooms = 0;
};

struct BuildingSetup {
    BuildingModel model;
    PlantModel plant;
    EquilibriumProblem problem;
    LyapunovCertificate cert;
    LyapunovFn V;
    AlgorithmOperator op;
    CertificateBundle bundle;
    double step_gamma = 0.0;
    Mat D_u;                     ///< linearized room sensitivity dT_room/du
    OccupancyRealization occupancy;
    DisturbanceSignal w;         ///< everything the plant sees
    DisturbanceSignal w_measured;///< solar and occupant gains hidden (zero)
    Vec x0;
    Vec u0;
};

[[nodiscard]] BuildingModel building_model(const BuildingScenario& scn);

/// Throws UnstableOpenLoop when L0 is not positive definite.
[[nodiscard]] BuildingSetup build_building(const BuildingScenario& scn);

/// Solar, ambient, ground, occupancy with an exact componentwise rate bound.
[[nodiscard]] DisturbanceSignal building_disturbance(const BuildingScenario& scn, const OccupancyRealization& occ,
                                                     bool hide_unmeasured);

/// Hysteresis thermostat: radiators per room, AHU heater and cooler on the mean room temperature.
[[nodiscard]] SampledPolicy thermostat_policy(const BuildingScenario& scn);

[[nodiscard]] TrajectoryLog thermostat_baseline(const BuildingSetup& setup, const BuildingScenario& scn,
                                                long horizon, double tau);

struct BuildingMetrics {
    double total_cost = 0.0;        ///< time integral of the comfort/energy cost
    double energy_cost = 0.0;
    double comfort_cost = 0.0;
    double violation_hours = 0.0;   ///< room-hours outside the comfort band
    double degree_hours = 0.0;      ///< integral of the distance to the band over rooms
    double heat_kwh = 0.0;          ///< delivered heating energy
};

/// Rectangle rule over the sample rows (inputs are held, outputs sampled).
[[nodiscard]] BuildingMetrics evaluate_building(const TrajectoryLog& log, const BuildingScenario& scn);

[[nodiscard]] double building_stage_cost(const Vec& u, const Vec& y, const BuildingScenario& scn,
                                         double* energy = nullptr, double* comfort = nullptr);

}  // namespace fes::scenarios
