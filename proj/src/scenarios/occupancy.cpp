#include "fes/scenarios/occupancy.hpp"

#include "fes/random.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace fes::scenarios {

bool WorkdaySchedule::at_work(double hour_of_day) const {
    return hour_of_day >= arrive && hour_of_day < leave && !(hour_of_day >= lunch_start && hour_of_day < lunch_end);
}

Vec OccupancyRealization::counts(int s) const {
    Vec c = Vec::Zero(rooms);
    if (s < 0 || s >= steps()) return c;
    for (int room : location[s]) {
        if (room >= 0) c[room] += 1.0;
    }
    return c;
}

double OccupancyRealization::occupant_hours() const {
    double total = 0.0;
    for (const auto& step : location) {
        total += static_cast<double>(std::count_if(step.begin(), step.end(), [](int r) { return r >= 0; }));
    }
    return total * step_hours;
}

OccupancyRealization sample_occupancy(int rooms, int occupants, const WorkdaySchedule& sch, double days,
                                      std::uint64_t seed, double watts, double ramp_hours) {
    if (rooms < 1 || occupants < 0 || !(days > 0.0) || !(sch.step_hours > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "occupancy: need rooms >= 1, occupants >= 0, positive duration");
    }
    if (!(ramp_hours > 0.0) || ramp_hours > sch.step_hours) {
        throw Error(ErrorCode::InvalidArgument, "occupancy: ramp must lie in (0, step]");
    }
    OccupancyRealization r;
    r.rooms = rooms;
    r.occupants = occupants;
    r.step_hours = sch.step_hours;
    r.days = days;
    r.watts = watts;
    r.ramp_hours = ramp_hours;
    const int n_steps = static_cast<int>(std::ceil(days * 24.0 / sch.step_hours - 1e-9));
    r.location.assign(n_steps, std::vector<int>(occupants, -1));

    Rng rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<int> any_room(0, rooms - 1);
    auto other_room = [&](int current) {
        if (rooms == 1) return current;
        const int k = std::uniform_int_distribution<int>(0, rooms - 2)(rng);
        return k >= current ? k + 1 : k;
    };
    std::vector<int> where(occupants, -1);
    for (int s = 0; s < n_steps; ++s) {
        const double hour = std::fmod((s + 0.5) * sch.step_hours, 24.0);
        const bool work = sch.at_work(hour);
        for (int o = 0; o < occupants; ++o) {
            int& loc = where[o];
            const double p = U(rng);
            if (!work) {
                loc = -1;
            } else if (loc < 0) {
                if (p < sch.p_arrive) loc = U(rng) < sch.home_bias ? o % rooms : any_room(rng);
            } else if (p < sch.p_break) {
                loc = -1;
            } else if (p < sch.p_break + sch.p_move) {
                loc = other_room(loc);
            }
            r.location[s][o] = loc;
        }
    }
    return r;
}

DisturbanceSignal occupancy_signal(const OccupancyRealization& r) {
    auto data = std::make_shared<const OccupancyRealization>(r);
    const int n = r.rooms;
    auto level = [data](int s) -> Vec { return data->counts(s) * data->watts; };
    auto value = [data, level](double t) -> Vec {
        const double dt = data->step_hours;
        const int s = static_cast<int>(std::floor(t / dt));
        const double into = t - s * dt;
        const Vec cur = level(s);
        if (into >= data->ramp_hours) return cur;
        const Vec prev = level(s - 1);
        return prev + (cur - prev) * (into / data->ramp_hours);
    };
    auto derivative = [data, level](double t) -> Vec {
        const double dt = data->step_hours;
        const int s = static_cast<int>(std::floor(t / dt));
        const double into = t - s * dt;
        if (into >= data->ramp_hours) return Vec::Zero(data->rooms);
        return (level(s) - level(s - 1)) / data->ramp_hours;
    };
    // Exact: the slope is piecewise constant and nonzero only on ramp windows.
    auto bound = [data, level](double t0, double t1) -> double {
        const double dt = data->step_hours;
        const int s0 = static_cast<int>(std::floor(t0 / dt));
        const int s1 = static_cast<int>(std::floor(t1 / dt));
        Vec sup = Vec::Zero(data->rooms);
        for (int s = s0; s <= s1; ++s) {
            const double ramp_lo = s * dt;
            const double ramp_hi = ramp_lo + data->ramp_hours;
            if (ramp_hi <= t0 || ramp_lo > t1) continue;
            sup = sup.cwiseMax(((level(s) - level(s - 1)) / data->ramp_hours).cwiseAbs());
        }
        return sup.norm();
    };
    const double cap = static_cast<double>(r.occupants) * r.watts;
    DisturbanceSignal sig(value, n, BoxSet::uniform(n, 0.0, std::max(cap, 1.0)));
    sig.with_derivative(derivative).with_rate_bound(bound);
    return sig;
}

DisturbanceSignal occupancy_process(int rooms, int occupants, const WorkdaySchedule& schedule, std::uint64_t seed,
                                    double days, double watts, double ramp_hours) {
    return occupancy_signal(sample_occupancy(rooms, occupants, schedule, days, seed, watts, ramp_hours));
}

}  // namespace fes::scenarios
