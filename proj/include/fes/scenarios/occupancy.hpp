#pragma once

#include "fes/plant.hpp"

#include <cstdint>
#include <vector>

namespace fes::scenarios {

/// Work-day profile of the occupant chains (hours of day).
struct WorkdaySchedule {
    double arrive = 8.0;
    double leave = 16.0;
    double lunch_start = 12.0;
    double lunch_end = 13.5;
    double step_hours = 1.0 / 12.0;   ///< chain time step
    double p_arrive = 0.35;           ///< away -> office, per step while at work
    double p_move = 0.05;             ///< switch to another room, per step
    double p_break = 0.03;            ///< step out, per step
    double home_bias = 0.8;           ///< probability that an arrival goes to the home room

    [[nodiscard]] bool at_work(double hour_of_day) const;
};

/// One sampled realization: location[s][o] = room index or -1 (away) during step s.
struct OccupancyRealization {
    int rooms = 0;
    int occupants = 0;
    double step_hours = 1.0;
    double days = 1.0;
    double watts = 100.0;
    double ramp_hours = 0.05;  ///< linear ramp between consecutive step levels
    std::vector<std::vector<int>> location;

    [[nodiscard]] int steps() const { return static_cast<int>(location.size()); }
    /// Head count per room in step s (zero outside the sampled range).
    [[nodiscard]] Vec counts(int s) const;
    /// Occupant-hours spent in rooms, counted from the chain itself.
    [[nodiscard]] double occupant_hours() const;
};

[[nodiscard]] OccupancyRealization sample_occupancy(int rooms, int occupants, const WorkdaySchedule& schedule,
                                                    double days, std::uint64_t seed, double watts = 100.0,
                                                    double ramp_hours = 0.05);

/// Per-room heat gain [W] with linear ramps and an exact rate bound.
[[nodiscard]] DisturbanceSignal occupancy_signal(const OccupancyRealization& r);

/// Convenience wrapper: sample and wrap in one call.
[[nodiscard]] DisturbanceSignal occupancy_process(int rooms, int occupants, const WorkdaySchedule& schedule,
                                                  std::uint64_t seed, double days = 1.0, double watts = 100.0,
                                                  double ramp_hours = 0.05);

}  // namespace fes::scenarios
