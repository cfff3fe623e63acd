#pragma once

#include <cmath>
#include <utility>

#include "epistate/dynamics.hpp"
#include "epistate/filter.hpp"
#include "epistate/mobility.hpp"
#include "epistate/policy.hpp"

namespace epistate::filter {

/// The 5N-dimensional epidemic state-space: transition moments come from the
/// conditional mean/covariance/Jacobian of the metapopulation model, with
/// policy multipliers and effective mobility evaluated per date.
class EpidemicModel : public TransitionModel {
public:
    EpidemicModel(Country country, ModelParams params, PolicyCalendar calendar,
                  mobility::MobilitySpec mobility, Date start_date)
        : country_(std::move(country)),
          params_(params),
          calendar_(std::move(calendar)),
          mobility_(std::move(mobility)),
          start_date_(start_date) {}

    int dim() const override { return 5 * country_.size(); }

    void step(int t_index, const VectorXd& x, VectorXd& mean_next, MatrixXd& jac,
              MatrixXd& noise) const override {
        const Date date = start_date_ + t_index;
        const PolicyMultipliers theta = multipliers_at(calendar_, params_, country_, date);
        const mobility::EffectiveMobility mob =
            mobility::effective_mobility(mobility_, theta, params_);
        const LatentState state = LatentState::from_stacked(x);
        mean_next = dynamics::conditional_mean(state, theta, mob, country_, params_);
        jac = dynamics::jacobian(state, theta, mob, country_, params_);
        noise = dynamics::conditional_cov(state, theta, mob, country_, params_);
    }

    const Country& country() const { return country_; }
    const ModelParams& params() const { return params_; }
    const PolicyCalendar& calendar() const { return calendar_; }
    const mobility::MobilitySpec& mobility_spec() const { return mobility_; }
    Date start_date() const { return start_date_; }

private:
    Country country_;
    ModelParams params_;
    PolicyCalendar calendar_;
    mobility::MobilitySpec mobility_;
    Date start_date_;
};

/// Diffuse-but-informative prior at the first observation date: no deaths or
/// recoveries yet, 100 presumed infections per state (sd 1000), susceptibles
/// at the remainder, transmission rate at its long-run level (sd beta_bar).
inline GaussianBelief initial_belief(const Country& country, const ModelParams& params,
                                     Date date) {
    const int n = country.size();
    LatentState x = LatentState::zero(n);
    x.i.setConstant(100.0);
    x.s = country.populations - x.i;
    x.beta0.setConstant(params.beta_bar);

    GaussianBelief belief;
    belief.date = date;
    belief.mean = x.stacked();
    VectorXd var(5 * n);
    var.segment(0 * n, n).setConstant(params.meas_sd * params.meas_sd);
    var.segment(1 * n, n).setConstant(1000.0 * 1000.0);
    var.segment(2 * n, n).setConstant(1000.0 * 1000.0);
    var.segment(3 * n, n).setConstant(1e-6);
    var.segment(4 * n, n).setConstant(params.beta_bar * params.beta_bar);
    belief.cov = var.asDiagonal();
    return belief;
}

/// Per-date observations of the cumulative-death block (state rows 0..N-1).
/// NaN entries mark missing state-days and are dropped from that date.
inline std::vector<Observation> death_observations(const std::vector<Date>& dates,
                                                   const MatrixXd& cum_deaths) {
    const int n = static_cast<int>(cum_deaths.cols());
    std::vector<Observation> obs(dates.size());
    for (size_t t = 0; t < dates.size(); ++t) {
        obs[t].date = dates[t];
        std::vector<double> vals;
        for (int j = 0; j < n; ++j) {
            const double v = cum_deaths(static_cast<Eigen::Index>(t), j);
            if (std::isfinite(v)) {
                obs[t].rows.push_back(j);
                vals.push_back(v);
            }
        }
        obs[t].values = Eigen::Map<VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    }
    return obs;
}

/// Epidemic-shaped prediction: one day forward under the model's policies.
inline GaussianBelief predict(const GaussianBelief& belief, const PolicyMultipliers& theta,
                              const mobility::EffectiveMobility& mob, const Country& country,
                              const ModelParams& params) {
    const LatentState state = LatentState::from_stacked(belief.mean);
    GaussianBelief out;
    out.date = belief.date + 1;
    out.mean = dynamics::conditional_mean(state, theta, mob, country, params);
    const MatrixXd jac = dynamics::jacobian(state, theta, mob, country, params);
    out.cov = jac * belief.cov * jac.transpose() +
              dynamics::conditional_cov(state, theta, mob, country, params);
    dynamics::repair_psd(out.cov);
    if (!out.mean.allFinite() || !out.cov.allFinite())
        throw NumericalError("non-finite state prediction", out.date);
    return out;
}

/// Epidemic-shaped update against all N cumulative death counts.
inline std::pair<GaussianBelief, double> update(const GaussianBelief& belief,
                                                const VectorXd& d_obs, double meas_sd) {
    GaussianBelief posterior = belief;
    std::vector<int> rows(d_obs.size());
    for (int j = 0; j < d_obs.size(); ++j) rows[j] = j;
    const double ll = update(posterior, rows, d_obs, meas_sd);
    return {std::move(posterior), ll};
}

}  // namespace epistate::filter
