#include "epistate/simulate.hpp"

namespace epistate::sim {

Trajectory simulate(const LatentState& init, const PolicyCalendar& calendar,
                    const mobility::MobilitySpec& mobility, const Country& country,
                    const ModelParams& params, Date start, int days, std::uint64_t seed) {
    Trajectory out;
    out.dates.reserve(static_cast<size_t>(days) + 1);
    out.states.reserve(static_cast<size_t>(days) + 1);
    out.dates.push_back(start);
    out.states.push_back(init);

    dynamics::Rng rng(seed);
    LatentState x = init;
    for (int t = 0; t < days; ++t) {
        const Date date = start + t;
        const auto theta = multipliers_at(calendar, params, country, date);
        const auto mob = mobility::effective_mobility(mobility, theta, params);
        x = dynamics::micro_step(x, theta, mob, country, params, rng);
        out.dates.push_back(date + 1);
        out.states.push_back(x);
    }
    return out;
}

LatentState seed_state(const Country& country, const ModelParams& params,
                       double initial_infected) {
    LatentState x = LatentState::zero(country.size());
    x.i.setConstant(initial_infected);
    x.s = country.populations - x.i;
    x.beta0.setConstant(params.beta_bar);
    return x;
}

estimation::DeathPanel to_death_panel(const Trajectory& trajectory, const Country& country) {
    estimation::DeathPanel panel;
    panel.dates = trajectory.dates;
    panel.states = country.state_codes;
    const auto t_len = static_cast<Eigen::Index>(trajectory.dates.size());
    panel.raw.resize(t_len, country.size());
    for (Eigen::Index t = 0; t < t_len; ++t)
        panel.raw.row(t) = trajectory.states[static_cast<size_t>(t)].d;
    panel.adjusted = panel.raw;
    return panel;
}

}  // namespace epistate::sim
