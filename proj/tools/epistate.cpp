#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "epistate/counterfactual.hpp"
#include "epistate/estimation.hpp"
#include "epistate/io.hpp"
#include "epistate/simulate.hpp"
#include "epistate/validate.hpp"

namespace fs = std::filesystem;
using namespace epistate;

namespace {

fs::path resolve(const fs::path& path) {
    if (path.empty() || path.is_absolute()) return path;
    if (const char* root = std::getenv("EPISTATE_DATA_DIR"))
        return fs::path(root) / path;
    return path;
}

void resolve_inputs(io::RunConfig& config) {
    config.deaths_path = resolve(config.deaths_path);
    config.travel_path = resolve(config.travel_path);
    config.commute_path = resolve(config.commute_path);
    config.policies_path = resolve(config.policies_path);
    config.populations_path = resolve(config.populations_path);
    config.params_path = resolve(config.params_path);
    config.scenario_path = resolve(config.scenario_path);
}

void add_input_options(CLI::App* cmd, io::RunConfig& config, bool deaths_required = true) {
    cmd->add_option("--deaths", config.deaths_path, "deaths CSV (date,state,cumulative_deaths)")
        ->required(deaths_required);
    cmd->add_option("--travel", config.travel_path, "travel fractions CSV")->required();
    cmd->add_option("--commute", config.commute_path, "commute fractions CSV")->required();
    cmd->add_option("--policies", config.policies_path, "policy calendar CSV")->required();
    cmd->add_option("--populations", config.populations_path, "state populations CSV")->required();
    cmd->add_option("--params", config.params_path, "model parameters file (key = value)");
    cmd->add_option("--out", config.output_dir, "output directory");
    cmd->add_option("--threads", config.threads, "max batch parallelism (0 = all cores)");
}

struct SmoothedBlocks {
    std::vector<Date> dates;
    std::vector<std::pair<std::string, VectorXd>> series;  // long-format columns
    filter::SmootherOutput smooth;
};

SmoothedBlocks smooth_inputs(const io::LoadedInputs& li, bool use_bf) {
    const auto panel = estimation::seasonal_adjust(li.panel);
    const filter::EpidemicModel model(li.country, li.params, li.calendar, li.mobility,
                                      panel.dates.front());
    filter::FilterOptions opts;
    opts.meas_sd = li.params.meas_sd;
    const auto fo = run_filter(model, filter::death_observations(panel.dates, panel.adjusted),
                               filter::initial_belief(li.country, li.params, panel.dates.front()),
                               opts);
    SmoothedBlocks out;
    out.smooth = use_bf ? filter::bf_smooth(fo) : filter::rts_smooth(fo);
    out.dates = panel.dates;

    const int n = li.country.size();
    const auto t_len = static_cast<Eigen::Index>(panel.dates.size());
    const char* block_names[5] = {"D", "S", "I", "R", "beta"};
    for (int b = 0; b < 5; ++b)
        for (int j = 0; j < n; ++j) {
            VectorXd mean(t_len), sd(t_len);
            for (Eigen::Index t = 0; t < t_len; ++t) {
                const auto& m = out.smooth.means[static_cast<size_t>(t)];
                const auto& p = out.smooth.covs[static_cast<size_t>(t)];
                mean[t] = m[b * n + j];
                sd[t] = std::sqrt(std::max(p(b * n + j, b * n + j), 0.0));
            }
            out.series.emplace_back(std::string(block_names[b]) + "." + li.country.state_codes[j],
                                    mean);
            out.series.emplace_back(std::string(block_names[b]) + "_sd." +
                                        li.country.state_codes[j],
                                    sd);
        }
    return out;
}

int run_validate(const io::RunConfig& config) {
    const auto li = io::load_inputs(config);
    for (const auto& w : li.warnings) std::cerr << "warning: " << w << '\n';
    const auto violations = validate(li.country, li.params, li.calendar, li.mobility);
    if (violations.empty()) {
        std::cout << "ok\n";
        return 0;
    }
    for (const auto& v : violations) std::cout << v << '\n';
    return 1;
}

int run_fit(const io::RunConfig& config, int max_evals) {
    auto li = io::load_inputs(config);
    const auto panel = estimation::seasonal_adjust(li.panel);
    estimation::FitOptions opts;
    if (max_evals > 0) opts.max_evaluations = max_evals;
    const auto result =
        estimation::fit(panel, li.calendar, li.mobility, li.country, li.params, {}, opts);

    fs::create_directories(config.output_dir);
    std::ofstream out(config.output_dir / "fit_result.csv");
    out << "beta_bar,sigma,rho,kappa,neg_loglik,converged,at_bound,evaluations\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g,%.10g,%d,%d,%d\n",
                  result.estimate.beta_bar, result.estimate.sigma, result.estimate.rho,
                  result.kappa, result.neg_loglik, result.converged ? 1 : 0,
                  result.at_bound ? 1 : 0, result.evaluations);
    out << buf;
    io::write_metadata(config.output_dir / "fit_metadata.json", li.params, li.input_hashes,
                       config.seed, {{"command", "fit"}});
    std::cout << "beta_bar=" << result.estimate.beta_bar << " sigma=" << result.estimate.sigma
              << " rho=" << result.estimate.rho << " neg_loglik=" << result.neg_loglik << '\n';
    return 0;
}

int run_filter_cmd(const io::RunConfig& config) {
    const auto li = io::load_inputs(config);
    const auto panel = estimation::seasonal_adjust(li.panel);
    const filter::EpidemicModel model(li.country, li.params, li.calendar, li.mobility,
                                      panel.dates.front());
    filter::FilterOptions opts;
    opts.meas_sd = li.params.meas_sd;
    const auto fo = run_filter(model, filter::death_observations(panel.dates, panel.adjusted),
                               filter::initial_belief(li.country, li.params, panel.dates.front()),
                               opts);

    fs::create_directories(config.output_dir);
    std::vector<std::pair<std::string, VectorXd>> series;
    const int n = li.country.size();
    const auto t_len = static_cast<Eigen::Index>(panel.dates.size());
    const char* block_names[5] = {"D", "S", "I", "R", "beta"};
    for (int b = 0; b < 5; ++b)
        for (int j = 0; j < n; ++j) {
            VectorXd mean(t_len);
            for (Eigen::Index t = 0; t < t_len; ++t)
                mean[t] = fo.steps[static_cast<size_t>(t)].x_filt[b * n + j];
            series.emplace_back(std::string(block_names[b]) + "." + li.country.state_codes[j],
                                mean);
        }
    io::write_series_csv(config.output_dir / "filtered.csv", panel.dates, series);
    io::write_metadata(config.output_dir / "filter_metadata.json", li.params, li.input_hashes,
                       config.seed,
                       {{"command", "filter"},
                        {"total_loglik", std::to_string(fo.total_loglik)}});
    std::cout << "total quasi log-likelihood: " << fo.total_loglik << '\n';
    return 0;
}

int run_smooth(const io::RunConfig& config, const std::string& smoother) {
    const auto li = io::load_inputs(config);
    const auto blocks = smooth_inputs(li, smoother == "bf");
    fs::create_directories(config.output_dir);
    io::write_series_csv(config.output_dir / "smoothed.csv", blocks.dates, blocks.series);
    io::write_metadata(config.output_dir / "smooth_metadata.json", li.params, li.input_hashes,
                       config.seed, {{"command", "smooth"}, {"smoother", smoother}});
    return 0;
}

int run_rt(const io::RunConfig& config) {
    const auto li = io::load_inputs(config);
    const auto blocks = smooth_inputs(li, false);
    const int n = li.country.size();
    const auto t_len = static_cast<Eigen::Index>(blocks.dates.size());

    std::vector<std::pair<std::string, VectorXd>> series;
    for (int j = 0; j < n; ++j) series.emplace_back(li.country.state_codes[j], VectorXd(t_len));
    for (Eigen::Index t = 0; t < t_len; ++t) {
        const auto state = LatentState::from_stacked(blocks.smooth.means[static_cast<size_t>(t)]);
        const auto theta =
            multipliers_at(li.calendar, li.params, li.country, blocks.dates[static_cast<size_t>(t)]);
        const VectorXd rt = dynamics::effective_r(state.beta0, theta.theta_m, theta.theta_s,
                                                  state.s.cwiseMin(li.country.populations),
                                                  li.country, li.params);
        for (int j = 0; j < n; ++j) series[static_cast<size_t>(j)].second[t] = rt[j];
    }
    fs::create_directories(config.output_dir);
    io::write_series_csv(config.output_dir / "rt.csv", blocks.dates, series);
    io::write_metadata(config.output_dir / "rt_metadata.json", li.params, li.input_hashes,
                       config.seed, {{"command", "rt"}});
    return 0;
}

int run_simulate(const io::RunConfig& config, int days, double i0, const std::string& start_str) {
    const auto country = io::load_populations(config.populations_path);
    const auto params =
        config.params_path.empty() ? ModelParams{} : io::load_params(config.params_path);
    const auto mobility = io::load_mobility(config.travel_path, config.commute_path, country);
    const auto calendar = io::load_policies(config.policies_path);
    const Date start = Date::parse(start_str);

    const auto trajectory = sim::simulate(sim::seed_state(country, params, i0), calendar,
                                          mobility, country, params, start, days, config.seed);
    const auto panel = sim::to_death_panel(trajectory, country);

    fs::create_directories(config.output_dir);
    io::save_deaths(panel, config.output_dir / "deaths.csv");

    std::vector<std::pair<std::string, VectorXd>> series;
    const auto t_len = static_cast<Eigen::Index>(trajectory.dates.size());
    const char* block_names[5] = {"D", "S", "I", "R", "beta"};
    for (int b = 0; b < 5; ++b)
        for (int j = 0; j < country.size(); ++j) {
            VectorXd col(t_len);
            for (Eigen::Index t = 0; t < t_len; ++t) {
                const auto& x = trajectory.states[static_cast<size_t>(t)];
                const VectorXd* blocks[5] = {&x.d, &x.s, &x.i, &x.r, &x.beta0};
                col[t] = (*blocks[b])[j];
            }
            series.emplace_back(std::string(block_names[b]) + "." + country.state_codes[j], col);
        }
    io::write_series_csv(config.output_dir / "latent.csv", trajectory.dates, series);

    std::map<std::string, std::string> hashes;
    hashes["populations"] = io::content_hash(config.populations_path);
    io::write_metadata(config.output_dir / "simulate_metadata.json", params, hashes, config.seed,
                       {{"command", "simulate"},
                        {"days", std::to_string(days)},
                        {"start", start_str}});
    return 0;
}

int run_counterfactual_cmd(const io::RunConfig& config, const std::string& only,
                           const std::string& mask_sweep_range) {
    const auto li = io::load_inputs(config);
    const auto panel = estimation::seasonal_adjust(li.panel);
    const Date horizon = config.horizon.value_or(panel.dates.back());
    fs::create_directories(config.output_dir);

    if (!mask_sweep_range.empty()) {
        const auto colon = mask_sweep_range.find(':');
        if (colon == std::string::npos)
            throw ConfigError("--mask-sweep expects START:END ISO dates");
        const Date first = Date::parse(mask_sweep_range.substr(0, colon));
        const Date last = Date::parse(mask_sweep_range.substr(colon + 1));
        const auto points = cf::mask_date_sweep(first, last, panel, li.calendar, li.mobility,
                                                li.country, li.params, config.threads);
        std::ofstream out(config.output_dir / "mask_sweep.csv");
        out << "mask_start,national_excess,error\n";
        char buf[64];
        for (const auto& p : points) {
            out << p.start.to_string() << ',';
            if (p.failed) {
                out << ",\"" << p.error << "\"";
            } else {
                std::snprintf(buf, sizeof(buf), "%.10g", p.national_excess);
                out << buf << ',';
            }
            out << '\n';
        }
        io::write_metadata(config.output_dir / "counterfactual_metadata.json", li.params,
                           li.input_hashes, config.seed,
                           {{"command", "counterfactual"}, {"mask_sweep", mask_sweep_range}});
        return 0;
    }

    if (config.scenario_path.empty())
        throw ConfigError("counterfactual needs --scenarios or --mask-sweep");
    const auto specs = io::load_scenarios(config.scenario_path);
    std::vector<cf::CounterfactualResult> results;
    for (const auto& spec : specs) {
        if (!only.empty() && spec.name != only) continue;
        auto scenario = cf::build_scenario(spec.kind, spec.policies, spec.scope_state,
                                           li.calendar, li.country, horizon, spec.overrides);
        scenario.name = spec.name;
        results.push_back(
            cf::run_counterfactual(panel, li.calendar, scenario, li.mobility, li.country,
                                   li.params));
        const auto& res = results.back();
        VectorXd base_national = res.baseline_deaths.rowwise().sum();
        VectorXd fict_national = res.fictitious_deaths.rowwise().sum();
        io::write_series_csv(config.output_dir / (spec.name + "_paths.csv"), res.dates,
                             {{"baseline_deaths", base_national},
                              {"fictitious_deaths", fict_national}});
    }
    if (results.empty()) throw ConfigError("no scenario named '" + only + "' in the file");
    io::write_excess_csv(config.output_dir / "excess.csv",
                         cf::excess_report(results, li.country));
    io::write_metadata(config.output_dir / "counterfactual_metadata.json", li.params,
                       li.input_hashes, config.seed,
                       {{"command", "counterfactual"},
                        {"horizon", horizon.to_string()}});
    for (const auto& res : results)
        std::cout << res.scenario.name << ": national excess " << res.national_excess << '\n';
    return 0;
}

int run_sweep(const io::RunConfig& config, const std::vector<std::string>& settings,
              int max_evals) {
    const auto li = io::load_inputs(config);
    const auto panel = estimation::seasonal_adjust(li.panel);
    const Date horizon = config.horizon.value_or(panel.dates.back());

    std::vector<std::pair<std::string, double>> overrides;
    for (const auto& setting : settings) {
        const auto eq = setting.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects name=value");
        overrides.emplace_back(setting.substr(0, eq), std::stod(setting.substr(eq + 1)));
    }

    std::vector<io::ScenarioSpec> specs;
    if (!config.scenario_path.empty()) specs = io::load_scenarios(config.scenario_path);

    estimation::CounterfactualRunner runner;
    if (!specs.empty()) {
        runner = [&](const ModelParams& fitted, const estimation::FitResult&) {
            std::map<std::string, double> excess;
            for (const auto& spec : specs) {
                auto scenario = cf::build_scenario(spec.kind, spec.policies, spec.scope_state,
                                                   li.calendar, li.country, horizon,
                                                   spec.overrides);
                scenario.name = spec.name;
                excess[spec.name] = cf::run_counterfactual(panel, li.calendar, scenario,
                                                           li.mobility, li.country, fitted)
                                        .national_excess;
            }
            return excess;
        };
    }

    estimation::FitOptions opts;
    if (max_evals > 0) opts.max_evaluations = max_evals;
    const auto rows = estimation::sensitivity_sweep(overrides, panel, li.calendar, li.mobility,
                                                    li.country, li.params, {}, opts, runner);

    fs::create_directories(config.output_dir);
    std::ofstream out(config.output_dir / "sweep.csv");
    out << "param,value,beta_bar,sigma,rho,neg_loglik,converged,error\n";
    char buf[256];
    for (const auto& row : rows) {
        if (row.failed) {
            out << row.param << ',' << row.value << ",,,,,,\"" << row.error << "\"\n";
            continue;
        }
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g,%.10g,%d,\n",
                      row.param.c_str(), row.value, row.fit.estimate.beta_bar,
                      row.fit.estimate.sigma, row.fit.estimate.rho, row.fit.neg_loglik,
                      row.fit.converged ? 1 : 0);
        out << buf;
    }
    std::ofstream out2(config.output_dir / "sweep_excess.csv");
    out2 << "param,value,scenario,national_excess\n";
    for (const auto& row : rows)
        for (const auto& [name, excess] : row.counterfactual_excess) {
            std::snprintf(buf, sizeof(buf), "%s,%.10g,%s,%.10g\n", row.param.c_str(), row.value,
                          name.c_str(), excess);
            out2 << buf;
        }
    io::write_metadata(config.output_dir / "sweep_metadata.json", li.params, li.input_hashes,
                       config.seed, {{"command", "sweep"}});
    return 0;
}

int run_fetch(const std::string& url, const fs::path& out_path) {
    const auto hash = io::fetch_deaths(url, out_path);
    const auto now = std::chrono::system_clock::now();
    const auto stamp = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch());
    io::write_metadata(out_path.string() + ".metadata.json", ModelParams{}, {{"deaths", hash}}, 0,
                       {{"command", "fetch"},
                        {"url", url},
                        {"retrieved_unix_seconds", std::to_string(stamp.count())}});
    std::cout << "content hash " << hash << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-state stochastic SIRD model: filtering, estimation, counterfactuals"};
    app.require_subcommand(1);

    io::RunConfig config;
    std::string horizon_str, smoother = "rts", only_scenario, mask_sweep_range, url, start_str =
        "2020-02-12";
    std::vector<std::string> settings;
    fs::path fetch_out = "deaths.csv";
    int days = 200, max_evals = 0;
    double i0 = 100.0;

    auto* cmd_validate = app.add_subcommand("validate", "check configuration invariants");
    add_input_options(cmd_validate, config);

    auto* cmd_fit = app.add_subcommand("fit", "quasi-ML fit of beta_bar, sigma, rho");
    add_input_options(cmd_fit, config);
    cmd_fit->add_option("--max-evals", max_evals, "objective evaluation budget");

    auto* cmd_filter = app.add_subcommand("filter", "forward EKF pass");
    add_input_options(cmd_filter, config);

    auto* cmd_smooth = app.add_subcommand("smooth", "forward filter plus fixed-interval smoother");
    add_input_options(cmd_smooth, config);
    cmd_smooth->add_option("--smoother", smoother, "rts or bf")
        ->check(CLI::IsMember({"rts", "bf"}));

    auto* cmd_rt = app.add_subcommand("rt", "effective reproduction numbers over smoothed states");
    add_input_options(cmd_rt, config);

    auto* cmd_sim = app.add_subcommand("simulate", "stochastic micro simulation");
    cmd_sim->add_option("--travel", config.travel_path)->required();
    cmd_sim->add_option("--commute", config.commute_path)->required();
    cmd_sim->add_option("--policies", config.policies_path)->required();
    cmd_sim->add_option("--populations", config.populations_path)->required();
    cmd_sim->add_option("--params", config.params_path);
    cmd_sim->add_option("--out", config.output_dir);
    cmd_sim->add_option("--days", days, "simulation length");
    cmd_sim->add_option("--i0", i0, "initial infected per state");
    cmd_sim->add_option("--start", start_str, "start date (ISO)");
    cmd_sim->add_option("--seed", config.seed, "random seed");

    auto* cmd_cf = app.add_subcommand("counterfactual", "policy counterfactuals");
    add_input_options(cmd_cf, config);
    cmd_cf->add_option("--scenarios", config.scenario_path, "scenario definition file");
    cmd_cf->add_option("--scenario", only_scenario, "run only the named scenario");
    cmd_cf->add_option("--mask-sweep", mask_sweep_range,
                       "mask-mandate start-date sweep, START:END");
    cmd_cf->add_option("--horizon", horizon_str, "horizon date (default: last observation)");

    auto* cmd_sweep = app.add_subcommand("sweep", "sensitivity sweep over fixed parameters");
    add_input_options(cmd_sweep, config);
    cmd_sweep->add_option("--set", settings, "override, e.g. gamma=0.1 (repeatable)");
    cmd_sweep->add_option("--scenarios", config.scenario_path, "scenario definition file");
    cmd_sweep->add_option("--horizon", horizon_str, "horizon date");
    cmd_sweep->add_option("--max-evals", max_evals, "objective evaluation budget per fit");

    auto* cmd_fetch = app.add_subcommand("fetch", "download a deaths CSV from an HTTP endpoint");
    cmd_fetch->add_option("--url", url, "endpoint URL")->required();
    cmd_fetch->add_option("--out-file", fetch_out, "destination file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        resolve_inputs(config);
        if (!horizon_str.empty()) config.horizon = Date::parse(horizon_str);
        if (cmd_validate->parsed()) return run_validate(config);
        if (cmd_fit->parsed()) return run_fit(config, max_evals);
        if (cmd_filter->parsed()) return run_filter_cmd(config);
        if (cmd_smooth->parsed()) return run_smooth(config, smoother);
        if (cmd_rt->parsed()) return run_rt(config);
        if (cmd_sim->parsed()) return run_simulate(config, days, i0, start_str);
        if (cmd_cf->parsed()) return run_counterfactual_cmd(config, only_scenario, mask_sweep_range);
        if (cmd_sweep->parsed()) return run_sweep(config, settings, max_evals);
        if (cmd_fetch->parsed()) return run_fetch(url, fetch_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
