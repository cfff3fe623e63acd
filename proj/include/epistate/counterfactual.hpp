#pragma once

#include <optional>
#include <string>
#include <vector>

#include "epistate/dynamics.hpp"
#include "epistate/epidemic_model.hpp"
#include "epistate/estimation.hpp"
#include "epistate/filter.hpp"

namespace epistate::cf {

using estimation::DeathPanel;

enum class ScenarioKind { Strict, Loose };

/// A fictitious policy calendar plus its scope: every state deviates, or a
/// single named state deviates while the rest keep the observed calendar.
struct Scenario {
    std::string name;
    PolicyCalendar calendar;
    std::string scope_state;  // empty = all states deviate
    std::string description;
    Date horizon;
};

/// Optional date overrides for the strict policy windows.
struct ScenarioOverrides {
    std::optional<Date> mask_start, mask_end;
    std::optional<Date> stay_home_start, stay_home_end;
    std::optional<Date> travel_ban_start, travel_ban_end;
};

/// Reference strict windows: stay-at-home 2020-03-19 to 2020-06-09, travel
/// ban 2020-03-17 to horizon, mask mandate 2020-04-17 to horizon.
Scenario build_scenario(ScenarioKind kind, const std::vector<PolicyKind>& policies,
                        const std::string& scope_state, const PolicyCalendar& observed,
                        const Country& country, Date horizon,
                        const ScenarioOverrides& overrides = {});

struct CounterfactualResult {
    Scenario scenario;
    std::vector<Date> dates;
    MatrixXd baseline_deaths;    // dates x N, smoothed D
    MatrixXd fictitious_deaths;  // dates x N, smoothed D*
    VectorXd excess;             // per state at the horizon
    double national_excess = 0.0;
};

/// Stacked baseline-plus-fictitious transition: both halves evolve under
/// their own policy calendars while their standardized process shocks are
/// almost perfectly correlated, pairing columns of the symmetric PSD square
/// roots of the two process-noise blocks.
class TwinModel : public filter::TransitionModel {
public:
    TwinModel(filter::EpidemicModel observed, filter::EpidemicModel fictitious,
              double shock_correlation = 1.0 - 1e-9)
        : observed_(std::move(observed)),
          fictitious_(std::move(fictitious)),
          shock_corr_(shock_correlation) {}

    int dim() const override { return 2 * observed_.dim(); }
    void step(int t_index, const VectorXd& x, VectorXd& mean_next, MatrixXd& jac,
              MatrixXd& noise) const override;

    const filter::EpidemicModel& observed() const { return observed_; }
    const filter::EpidemicModel& fictitious() const { return fictitious_; }
    double shock_correlation() const { return shock_corr_; }

private:
    filter::EpidemicModel observed_;
    filter::EpidemicModel fictitious_;
    double shock_corr_;
};

/// Augmented initial belief: the fictitious block copies the baseline prior
/// and starts almost perfectly correlated with it.
filter::GaussianBelief twin_initial_belief(const filter::GaussianBelief& base,
                                           double shock_correlation = 1.0 - 1e-9);

/// Filter the augmented system against observed deaths, smooth it with
/// Bryson-Frazier, and report baseline and fictitious death paths plus the
/// excess at the horizon.
CounterfactualResult run_counterfactual(const DeathPanel& panel, const PolicyCalendar& observed,
                                        const Scenario& scenario,
                                        const mobility::MobilitySpec& mobility,
                                        const Country& country, const ModelParams& params);

/// Per-state and national excess summary across scenarios sharing a horizon.
struct ExcessReportRow {
    std::string scenario;
    std::string state;  // "US" for the national row
    double baseline = 0.0;
    double excess = 0.0;
    bool has_relative = false;
    double relative = 0.0;  // excess / baseline deaths at horizon
};
std::vector<ExcessReportRow> excess_report(const std::vector<CounterfactualResult>& results,
                                           const Country& country);

struct SweepPoint {
    Date start;
    double national_excess = 0.0;
    bool failed = false;
    std::string error;
};

/// One strict-mask counterfactual per candidate start date (mask mandate for
/// every state from that date through the horizon, superseding observed mask
/// policies; other policies as observed). Runs as a concurrent batch.
std::vector<SweepPoint> mask_date_sweep(Date first_start, Date last_start,
                                        const DeathPanel& panel, const PolicyCalendar& observed,
                                        const mobility::MobilitySpec& mobility,
                                        const Country& country, const ModelParams& params,
                                        int threads = 0);

}  // namespace epistate::cf
