#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "epistate/epidemic_model.hpp"
#include "epistate/filter.hpp"
#include "epistate/mobility.hpp"
#include "epistate/policy.hpp"
#include "epistate/types.hpp"

namespace epistate::estimation {

/// Daily cumulative death counts per state, raw and seasonally adjusted.
/// Until seasonal_adjust runs, `adjusted` equals `raw`.
struct DeathPanel {
    std::vector<Date> dates;
    std::vector<std::string> states;
    MatrixXd raw;       // dates x states, cumulative
    MatrixXd adjusted;  // same shape

    int days() const { return static_cast<int>(dates.size()); }
    int n_states() const { return static_cast<int>(states.size()); }
};

/// Remove day-of-week seasonality from the daily increments of each state:
/// trend is a centered 7-day moving average (edges padded by replication),
/// the seasonal term is the re-centered day-of-week mean of the detrended
/// increments, and adjusted increments are the raw ones minus the seasonal
/// term, floored at zero, re-cumulated, and rescaled so each state's final
/// cumulative total is preserved. Requires at least 21 days.
DeathPanel seasonal_adjust(const DeathPanel& raw);

/// Free parameters of the quasi-likelihood fit.
struct FreeParams {
    double beta_bar;
    double sigma;
    double rho;
};

struct FitBounds {
    FreeParams lo{0.01, 0.001, 0.0};
    FreeParams hi{2.0, 1.0, 0.99};
};

struct FitResult {
    FreeParams estimate;
    double neg_loglik = 0.0;
    bool converged = false;
    bool at_bound = false;
    int evaluations = 0;
    double kappa = 0.0;  // echo of the fixed mean-reversion speed
};

struct FitOptions {
    int max_evaluations = 500;
    double tolerance = 1e-4;  // simplex spread in transformed coordinates
};

/// Negative total quasi log-likelihood of the panel under the given free
/// parameters (everything else fixed). Filter failures map to a large finite
/// penalty that grows with the distance from the starting point, so a search
/// retreats instead of crashing.
double neg_quasi_loglik(const FreeParams& free_params, const ModelParams& fixed,
                        const DeathPanel& panel, const PolicyCalendar& calendar,
                        const mobility::MobilitySpec& mobility, const Country& country);

/// Derivative-free quasi-ML fit of (beta_bar, sigma, rho) with kappa held
/// fixed. Works in transformed coordinates (log beta_bar, log sigma, a tanh
/// map for rho); candidates outside `bounds` are projected back with a
/// penalty. Never returns a point worse than the initialization.
FitResult fit(const DeathPanel& panel, const PolicyCalendar& calendar,
              const mobility::MobilitySpec& mobility, const Country& country,
              const ModelParams& params_init, const FitBounds& bounds = {},
              const FitOptions& opts = {});

/// Generic Nelder-Mead minimizer used by `fit`; exposed for reuse and tests.
struct SimplexResult {
    VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};
SimplexResult nelder_mead(const std::function<double(const VectorXd&)>& objective,
                          const VectorXd& start, double initial_step, double tolerance,
                          int max_evaluations);

/// One row of a sensitivity sweep: a fixed-parameter override, the re-fitted
/// free parameters, and the requested counterfactual summaries.
struct SweepRow {
    std::string param;
    double value = 0.0;
    FitResult fit;
    std::map<std::string, double> counterfactual_excess;  // scenario name -> national excess
    bool failed = false;
    std::string error;
};

using CounterfactualRunner =
    std::function<std::map<std::string, double>(const ModelParams&, const FitResult&)>;

/// Re-fit under each (param-name, value) override, then evaluate the caller's
/// counterfactuals at the re-fitted parameters. Per-row failures are recorded
/// in the row; the sweep continues.
std::vector<SweepRow> sensitivity_sweep(
    const std::vector<std::pair<std::string, double>>& overrides, const DeathPanel& panel,
    const PolicyCalendar& calendar, const mobility::MobilitySpec& mobility,
    const Country& country, const ModelParams& base_params, const FitBounds& bounds = {},
    const FitOptions& opts = {}, const CounterfactualRunner& runner = {});

/// Apply a named scalar override to a parameter set; unknown names throw.
void apply_override(ModelParams& params, const std::string& name, double value);

}  // namespace epistate::estimation
