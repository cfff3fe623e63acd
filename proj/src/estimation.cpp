#include "epistate/estimation.hpp"

#include <algorithm>
#include <cmath>

namespace epistate::estimation {

DeathPanel seasonal_adjust(const DeathPanel& input) {
    const int t_len = input.days();
    const int n = input.n_states();
    if (t_len < 21)
        throw ConfigError("seasonal adjustment needs at least 21 days, got " +
                          std::to_string(t_len));

    DeathPanel out = input;
    for (int j = 0; j < n; ++j) {
        VectorXd inc(t_len);
        inc[0] = input.raw(0, j);
        for (int t = 1; t < t_len; ++t) inc[t] = input.raw(t, j) - input.raw(t - 1, j);

        // Centered 7-day moving average with replicated edges.
        VectorXd trend(t_len);
        for (int t = 0; t < t_len; ++t) {
            double acc = 0.0;
            for (int k = -3; k <= 3; ++k) acc += inc[std::clamp(t + k, 0, t_len - 1)];
            trend[t] = acc / 7.0;
        }

        const VectorXd detrended = inc - trend;
        double dow_mean[7] = {0, 0, 0, 0, 0, 0, 0};
        int dow_count[7] = {0, 0, 0, 0, 0, 0, 0};
        for (int t = 0; t < t_len; ++t) {
            const int k = input.dates[static_cast<size_t>(t)].day_of_week();
            dow_mean[k] += detrended[t];
            ++dow_count[k];
        }
        double season_total = 0.0;
        for (int k = 0; k < 7; ++k) {
            if (dow_count[k] > 0) dow_mean[k] /= dow_count[k];
            season_total += dow_mean[k];
        }
        for (double& m : dow_mean) m -= season_total / 7.0;

        VectorXd adj_inc(t_len);
        for (int t = 0; t < t_len; ++t) {
            const int k = input.dates[static_cast<size_t>(t)].day_of_week();
            adj_inc[t] = std::max(inc[t] - dow_mean[k], 0.0);
        }

        const double raw_final = input.raw(t_len - 1, j);
        const double adj_final = adj_inc.sum();
        if (adj_final > 0.0 && raw_final > 0.0) adj_inc *= raw_final / adj_final;

        double cum = 0.0;
        for (int t = 0; t < t_len; ++t) {
            cum += adj_inc[t];
            out.adjusted(t, j) = cum;
        }
    }
    return out;
}

double neg_quasi_loglik(const FreeParams& free_params, const ModelParams& fixed,
                        const DeathPanel& panel, const PolicyCalendar& calendar,
                        const mobility::MobilitySpec& mobility, const Country& country) {
    ModelParams params = fixed;
    params.beta_bar = free_params.beta_bar;
    params.sigma = free_params.sigma;
    params.rho = free_params.rho;
    try {
        const filter::EpidemicModel model(country, params, calendar, mobility,
                                          panel.dates.front());
        const auto obs = filter::death_observations(panel.dates, panel.adjusted);
        filter::FilterOptions opts;
        opts.store_history = false;
        opts.meas_sd = params.meas_sd;
        const auto fo =
            run_filter(model, obs, filter::initial_belief(country, params, panel.dates.front()),
                       opts);
        return -fo.total_loglik;
    } catch (const NumericalError&) {
        // Finite sentinel; grows away from the reference parameterization so
        // a derivative-free search retreats toward feasible ground.
        const double dist = std::abs(std::log(free_params.beta_bar / fixed.beta_bar)) +
                            std::abs(std::log(free_params.sigma / fixed.sigma)) +
                            std::abs(free_params.rho - fixed.rho);
        return 1e12 * (1.0 + dist);
    }
}

namespace {

// Transformed coordinates: positive parameters move on a log scale, the
// correlation through a tanh map onto (0,1).
VectorXd to_unconstrained(const FreeParams& p) {
    VectorXd u(3);
    u[0] = std::log(p.beta_bar);
    u[1] = std::log(p.sigma);
    u[2] = std::atanh(std::clamp(2.0 * p.rho - 1.0, -1.0 + 1e-12, 1.0 - 1e-12));
    return u;
}

FreeParams from_unconstrained(const VectorXd& u) {
    FreeParams p;
    p.beta_bar = std::exp(u[0]);
    p.sigma = std::exp(u[1]);
    p.rho = 0.5 * (std::tanh(u[2]) + 1.0);
    return p;
}

FreeParams project(const FreeParams& p, const FitBounds& b, double& excess) {
    FreeParams q = p;
    excess = 0.0;
    auto clampf = [&](double v, double lo, double hi) {
        const double c = std::clamp(v, lo, hi);
        excess += std::abs(v - c) / std::max(hi - lo, 1e-12);
        return c;
    };
    q.beta_bar = clampf(p.beta_bar, b.lo.beta_bar, b.hi.beta_bar);
    q.sigma = clampf(p.sigma, b.lo.sigma, b.hi.sigma);
    q.rho = clampf(p.rho, b.lo.rho, b.hi.rho);
    return q;
}

}  // namespace

SimplexResult nelder_mead(const std::function<double(const VectorXd&)>& objective,
                          const VectorXd& start, double initial_step, double tolerance,
                          int max_evaluations) {
    const int dim = static_cast<int>(start.size());
    int evals = 0;
    auto eval = [&](const VectorXd& x) {
        ++evals;
        return objective(x);
    };

    std::vector<VectorXd> vertex(dim + 1, start);
    std::vector<double> value(dim + 1);
    for (int k = 0; k < dim; ++k) vertex[k + 1][k] += initial_step;
    for (int k = 0; k <= dim; ++k) value[k] = eval(vertex[k]);

    auto order = [&] {
        for (int a = 0; a <= dim; ++a)
            for (int b = a + 1; b <= dim; ++b)
                if (value[b] < value[a]) {
                    std::swap(value[a], value[b]);
                    std::swap(vertex[a], vertex[b]);
                }
    };

    bool converged = false;
    while (evals < max_evaluations) {
        order();
        double spread = 0.0;
        for (int k = 1; k <= dim; ++k)
            spread = std::max(spread, (vertex[k] - vertex[0]).cwiseAbs().maxCoeff());
        if (spread < tolerance) {
            converged = true;
            break;
        }

        VectorXd centroid = VectorXd::Zero(dim);
        for (int k = 0; k < dim; ++k) centroid += vertex[k];
        centroid /= dim;

        const VectorXd reflected = centroid + (centroid - vertex[dim]);
        const double fr = eval(reflected);
        if (fr < value[0]) {
            const VectorXd expanded = centroid + 2.0 * (centroid - vertex[dim]);
            const double fe = eval(expanded);
            if (fe < fr) {
                vertex[dim] = expanded;
                value[dim] = fe;
            } else {
                vertex[dim] = reflected;
                value[dim] = fr;
            }
        } else if (fr < value[dim - 1]) {
            vertex[dim] = reflected;
            value[dim] = fr;
        } else {
            const VectorXd contracted = centroid + 0.5 * (vertex[dim] - centroid);
            const double fc = eval(contracted);
            if (fc < value[dim]) {
                vertex[dim] = contracted;
                value[dim] = fc;
            } else {
                for (int k = 1; k <= dim; ++k) {
                    vertex[k] = vertex[0] + 0.5 * (vertex[k] - vertex[0]);
                    value[k] = eval(vertex[k]);
                }
            }
        }
    }
    order();
    return {vertex[0], value[0], evals, converged};
}

FitResult fit(const DeathPanel& panel, const PolicyCalendar& calendar,
              const mobility::MobilitySpec& mobility, const Country& country,
              const ModelParams& params_init, const FitBounds& bounds, const FitOptions& opts) {
    const FreeParams start{params_init.beta_bar, params_init.sigma, params_init.rho};

    auto objective = [&](const VectorXd& u) {
        double excess = 0.0;
        const FreeParams p = project(from_unconstrained(u), bounds, excess);
        double v = neg_quasi_loglik(p, params_init, panel, calendar, mobility, country);
        if (excess > 0.0) v += 1e6 * excess * (1.0 + std::abs(v) * 1e-6);
        return v;
    };

    const auto sr =
        nelder_mead(objective, to_unconstrained(start), 0.2, opts.tolerance, opts.max_evaluations);

    double excess = 0.0;
    FreeParams est = project(from_unconstrained(sr.x), bounds, excess);
    double best = neg_quasi_loglik(est, params_init, panel, calendar, mobility, country);
    const double at_start = neg_quasi_loglik(start, params_init, panel, calendar, mobility, country);

    FitResult out;
    out.kappa = params_init.kappa;
    out.evaluations = sr.evaluations;
    if (best > at_start) {  // never worse than the initialization
        est = start;
        best = at_start;
        out.converged = false;
    } else {
        out.converged = sr.converged;
    }
    out.estimate = est;
    out.neg_loglik = best;

    auto near = [](double v, double b) { return std::abs(v - b) < 1e-6; };
    out.at_bound = near(est.beta_bar, bounds.lo.beta_bar) || near(est.beta_bar, bounds.hi.beta_bar) ||
                   near(est.sigma, bounds.lo.sigma) || near(est.sigma, bounds.hi.sigma) ||
                   near(est.rho, bounds.lo.rho) || near(est.rho, bounds.hi.rho);
    return out;
}

void apply_override(ModelParams& params, const std::string& name, double value) {
    if (name == "gamma") params.gamma = value;
    else if (name == "delta") params.delta = value;
    else if (name == "kappa") params.kappa = value;
    else if (name == "beta_bar") params.beta_bar = value;
    else if (name == "sigma") params.sigma = value;
    else if (name == "rho") params.rho = value;
    else if (name == "theta_m_low") params.theta_m_low = value;
    else if (name == "theta_s_low") params.theta_s_low = value;
    else if (name == "theta_t_low") params.theta_t_low = value;
    else if (name == "tau_com") params.tau_com = value;
    else if (name == "tau_trav") params.tau_trav = value;
    else if (name == "meas_sd") params.meas_sd = value;
    else if (name == "dt") params.dt = value;
    else throw ConfigError("unknown parameter '" + name + "'");
}

std::vector<SweepRow> sensitivity_sweep(
    const std::vector<std::pair<std::string, double>>& overrides, const DeathPanel& panel,
    const PolicyCalendar& calendar, const mobility::MobilitySpec& mobility,
    const Country& country, const ModelParams& base_params, const FitBounds& bounds,
    const FitOptions& opts, const CounterfactualRunner& runner) {
    std::vector<SweepRow> rows;
    rows.reserve(overrides.size());
    for (const auto& [name, value] : overrides) {
        SweepRow row;
        row.param = name;
        row.value = value;
        try {
            ModelParams params = base_params;
            apply_override(params, name, value);
            row.fit = fit(panel, calendar, mobility, country, params, bounds, opts);
            if (runner) {
                ModelParams fitted = params;
                fitted.beta_bar = row.fit.estimate.beta_bar;
                fitted.sigma = row.fit.estimate.sigma;
                fitted.rho = row.fit.estimate.rho;
                row.counterfactual_excess = runner(fitted, row.fit);
            }
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace epistate::estimation
