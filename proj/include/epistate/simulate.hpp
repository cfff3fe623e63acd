#pragma once

#include <cstdint>
#include <vector>

#include "epistate/dynamics.hpp"
#include "epistate/estimation.hpp"

namespace epistate::sim {

struct Trajectory {
    std::vector<Date> dates;
    std::vector<LatentState> states;  // one per date, starting at the initial state
};

/// Multi-day micro simulation under the calendar's policies. Deterministic
/// given the seed; day t uses the multipliers active on day t.
Trajectory simulate(const LatentState& init, const PolicyCalendar& calendar,
                    const mobility::MobilitySpec& mobility, const Country& country,
                    const ModelParams& params, Date start, int days, std::uint64_t seed);

/// Integer-valued starting point: `initial_infected` per state, everyone else
/// susceptible, transmission rate at its long-run level.
LatentState seed_state(const Country& country, const ModelParams& params,
                       double initial_infected);

/// Cumulative-death panel view of a trajectory (exact counts; the model
/// treats measurement error as negligible).
estimation::DeathPanel to_death_panel(const Trajectory& trajectory, const Country& country);

}  // namespace epistate::sim
