#include "epistate/counterfactual.hpp"

#include <atomic>
#include <thread>

namespace epistate::cf {

namespace {

const Date kStrictStayStart = Date::from_ymd(2020, 3, 19);
const Date kStrictStayEnd = Date::from_ymd(2020, 6, 9);
const Date kStrictTravelStart = Date::from_ymd(2020, 3, 17);
const Date kStrictMaskStart = Date::from_ymd(2020, 4, 17);

}  // namespace

Scenario build_scenario(ScenarioKind kind, const std::vector<PolicyKind>& policies,
                        const std::string& scope_state, const PolicyCalendar& observed,
                        const Country& country, Date horizon, const ScenarioOverrides& overrides) {
    if (policies.empty()) throw ConfigError("scenario needs at least one policy");
    if (!scope_state.empty() && country.index_of(scope_state) < 0)
        throw ConfigError("scenario scope names unknown state '" + scope_state + "'");

    Scenario s;
    s.horizon = horizon;
    s.scope_state = scope_state;
    s.calendar = observed;

    std::string tag;
    for (const auto& kind_token : policies) tag += std::string("_") + to_string(kind_token);
    s.name = (kind == ScenarioKind::Strict ? "strict" : "loose") + tag +
             (scope_state.empty() ? std::string("_all") : "_" + scope_state);

    const std::vector<std::string> in_scope =
        scope_state.empty() ? country.state_codes : std::vector<std::string>{scope_state};

    for (PolicyKind p : policies) {
        // The counterfactual policy supersedes the observed one in scope.
        for (const auto& code : in_scope) s.calendar.remove(p, code);
        if (kind == ScenarioKind::Loose) continue;

        Date start, end;
        switch (p) {
            case PolicyKind::Mask:
                start = overrides.mask_start.value_or(kStrictMaskStart);
                end = overrides.mask_end.value_or(horizon);
                break;
            case PolicyKind::StayHome:
                start = overrides.stay_home_start.value_or(kStrictStayStart);
                end = overrides.stay_home_end.value_or(kStrictStayEnd);
                break;
            case PolicyKind::TravelBan:
                start = overrides.travel_ban_start.value_or(kStrictTravelStart);
                end = overrides.travel_ban_end.value_or(horizon);
                break;
        }
        for (const auto& code : in_scope) s.calendar.add({code, p, start, end});
    }
    s.description = (kind == ScenarioKind::Strict ? "strict" : "loose");
    return s;
}

void TwinModel::step(int t_index, const VectorXd& x, VectorXd& mean_next, MatrixXd& jac,
                     MatrixXd& noise) const {
    const int half = observed_.dim();
    VectorXd mean_o, mean_f;
    MatrixXd jac_o, jac_f, cov_o, cov_f;
    observed_.step(t_index, x.head(half), mean_o, jac_o, cov_o);
    fictitious_.step(t_index, x.tail(half), mean_f, jac_f, cov_f);

    mean_next.resize(2 * half);
    mean_next << mean_o, mean_f;

    jac = MatrixXd::Zero(2 * half, 2 * half);
    jac.topLeftCorner(half, half) = jac_o;
    jac.bottomRightCorner(half, half) = jac_f;

    const MatrixXd sqrt_o = dynamics::psd_sqrt(cov_o);
    const MatrixXd sqrt_f = dynamics::psd_sqrt(cov_f);
    const MatrixXd cross = shock_corr_ * (sqrt_o * sqrt_f);
    noise.resize(2 * half, 2 * half);
    noise.topLeftCorner(half, half) = cov_o;
    noise.topRightCorner(half, half) = cross;
    noise.bottomLeftCorner(half, half) = cross.transpose();
    noise.bottomRightCorner(half, half) = cov_f;
}

filter::GaussianBelief twin_initial_belief(const filter::GaussianBelief& base,
                                           double shock_correlation) {
    const auto half = base.mean.size();
    filter::GaussianBelief out;
    out.date = base.date;
    out.mean.resize(2 * half);
    out.mean << base.mean, base.mean;
    out.cov = MatrixXd::Zero(2 * half, 2 * half);
    out.cov.topLeftCorner(half, half) = base.cov;
    out.cov.topRightCorner(half, half) = shock_correlation * base.cov;
    out.cov.bottomLeftCorner(half, half) = shock_correlation * base.cov;
    out.cov.bottomRightCorner(half, half) = base.cov;
    return out;
}

CounterfactualResult run_counterfactual(const DeathPanel& panel, const PolicyCalendar& observed,
                                        const Scenario& scenario,
                                        const mobility::MobilitySpec& mobility,
                                        const Country& country, const ModelParams& params) {
    const int n = country.size();
    const Date start = panel.dates.front();
    if (scenario.horizon < start || scenario.horizon > panel.dates.back())
        throw ConfigError("scenario horizon " + scenario.horizon.to_string() +
                          " outside the data range");

    filter::EpidemicModel base_model(country, params, observed, mobility, start);
    filter::EpidemicModel fict_model(country, params, scenario.calendar, mobility, start);
    const TwinModel twin(std::move(base_model), std::move(fict_model));

    const auto base_init = filter::initial_belief(country, params, start);
    const auto init = twin_initial_belief(base_init, twin.shock_correlation());

    // Observations touch only the baseline D block.
    auto obs = filter::death_observations(panel.dates, panel.adjusted);

    filter::FilterOptions opts;
    opts.meas_sd = params.meas_sd;
    filter::FilterOutput fo;
    try {
        fo = run_filter(twin, obs, init, opts);
    } catch (const NumericalError& e) {
        throw NumericalError("counterfactual '" + scenario.name + "' failed: " + e.what(),
                             e.date);
    }
    const auto smooth = filter::bf_smooth(fo);
    if (smooth.max_inverted_dim > n)
        throw std::logic_error("augmented smoother inverted a matrix larger than N x N");

    CounterfactualResult res;
    res.scenario = scenario;
    res.dates = panel.dates;
    res.baseline_deaths.resize(panel.days(), n);
    res.fictitious_deaths.resize(panel.days(), n);
    const int half = 5 * n;
    for (int t = 0; t < panel.days(); ++t) {
        res.baseline_deaths.row(t) = smooth.means[static_cast<size_t>(t)].segment(0, n);
        res.fictitious_deaths.row(t) = smooth.means[static_cast<size_t>(t)].segment(half, n);
    }
    const auto h = static_cast<int>(scenario.horizon - start);
    res.excess = (res.fictitious_deaths.row(h) - res.baseline_deaths.row(h)).transpose();
    res.national_excess = res.excess.sum();
    return res;
}

std::vector<ExcessReportRow> excess_report(const std::vector<CounterfactualResult>& results,
                                           const Country& country) {
    for (size_t k = 1; k < results.size(); ++k)
        if (results[k].scenario.horizon != results[0].scenario.horizon)
            throw ConfigError("excess report requires a shared horizon");

    std::vector<ExcessReportRow> rows;
    for (const auto& res : results) {
        const auto h = static_cast<int>(res.scenario.horizon - res.dates.front());
        double national_base = 0.0;
        for (int j = 0; j < country.size(); ++j) {
            ExcessReportRow row;
            row.scenario = res.scenario.name;
            row.state = country.state_codes[j];
            row.baseline = res.baseline_deaths(h, j);
            row.excess = res.excess[j];
            national_base += row.baseline;
            if (row.baseline > 0.0) {
                row.has_relative = true;
                row.relative = row.excess / row.baseline;
            }
            rows.push_back(row);
        }
        ExcessReportRow national;
        national.scenario = res.scenario.name;
        national.state = "US";
        national.baseline = national_base;
        national.excess = res.national_excess;
        if (national_base > 0.0) {
            national.has_relative = true;
            national.relative = national.excess / national_base;
        }
        rows.push_back(national);
    }
    return rows;
}

std::vector<SweepPoint> mask_date_sweep(Date first_start, Date last_start,
                                        const DeathPanel& panel, const PolicyCalendar& observed,
                                        const mobility::MobilitySpec& mobility,
                                        const Country& country, const ModelParams& params,
                                        int threads) {
    if (last_start < first_start) throw ConfigError("empty mask sweep range");
    const int count = last_start - first_start + 1;
    std::vector<SweepPoint> points(static_cast<size_t>(count));

    const Date horizon = panel.dates.back();
    if (threads <= 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next.fetch_add(1); k < count; k = next.fetch_add(1)) {
            const Date start = first_start + k;
            auto& point = points[static_cast<size_t>(k)];
            point.start = start;
            try {
                ScenarioOverrides ov;
                ov.mask_start = start;
                auto scenario = build_scenario(ScenarioKind::Strict, {PolicyKind::Mask}, "",
                                               observed, country, horizon, ov);
                scenario.name = "mask_from_" + start.to_string();
                const auto res =
                    run_counterfactual(panel, observed, scenario, mobility, country, params);
                point.national_excess = res.national_excess;
            } catch (const std::exception& e) {
                point.failed = true;
                point.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int k = 0; k < threads - 1; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return points;
}

}  // namespace epistate::cf
