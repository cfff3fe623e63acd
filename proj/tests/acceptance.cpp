// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Criteria with runtime budgets enforce them.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <thread>

#include "epistate/counterfactual.hpp"
#include "epistate/estimation.hpp"
#include "epistate/io.hpp"
#include "epistate/simulate.hpp"
#include "gaussian_oracle.hpp"

using namespace epistate;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
    std::printf("criterion %d (%s): %s%s%s\n", criterion, name, pass ? "PASS" : "FAIL",
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Country make_country(int n, double pop = 1e6) {
    Country c;
    for (int j = 0; j < n; ++j) c.state_codes.push_back("S" + std::to_string(j));
    c.populations = VectorXd::Constant(n, pop);
    return c;
}

PolicyMultipliers unit_theta(int n) {
    PolicyMultipliers t;
    t.theta_m = VectorXd::Ones(n);
    t.theta_s = VectorXd::Ones(n);
    t.theta_t = VectorXd::Ones(n);
    return t;
}

mobility::MobilitySpec random_spec(int n, std::uint64_t seed, double trav_scale = 0.003,
                                   double com_scale = 0.03) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    mobility::MobilitySpec spec = mobility::MobilitySpec::zero(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (a != b) {
                spec.w_trav(a, b) = trav_scale * u(gen) / n;
                spec.w_com(a, b) = com_scale * u(gen) / n;
            }
    return spec;
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic one-step moments match micro-simulation moments.
void criterion_1() {
    const auto t0 = Clock::now();
    const ModelParams params;  // reference values
    bool pass = true;
    std::string detail;
    const int reps = 100000;

    for (const int n : {1, 2, 3}) {
        const auto country = make_country(n);
        const auto spec = n == 1 ? mobility::MobilitySpec::zero(1) : random_spec(n, 51 + n);
        PolicyMultipliers theta = unit_theta(n);
        if (n >= 2) theta.theta_m[0] = params.theta_m_low;  // exercise a policy
        const auto mob = mobility::effective_mobility(spec, theta, params);

        LatentState x0 = LatentState::zero(n);
        x0.i.setConstant(1e4);
        x0.s = country.populations - x0.i;
        x0.beta0.setConstant(params.beta_bar);

        const VectorXd mean = dynamics::conditional_mean(x0, theta, mob, country, params);
        const MatrixXd cov = dynamics::conditional_cov(x0, theta, mob, country, params);

        dynamics::Rng rng(900 + n);
        MatrixXd samples(reps, 5 * n);
        for (int r = 0; r < reps; ++r)
            samples.row(r) =
                dynamics::micro_step(x0, theta, mob, country, params, rng).stacked().transpose();

        const Eigen::RowVectorXd sample_mean = samples.colwise().mean();
        const MatrixXd centered = samples.rowwise() - sample_mean;
        const MatrixXd sample_cov = centered.transpose() * centered / (reps - 1.0);

        int worst_idx = -1;
        double worst_z = 0.0;
        for (int k = 0; k < 5 * n; ++k) {
            const double se = std::sqrt(std::max(cov(k, k), 1e-30) / reps);
            const double z = std::abs(sample_mean[k] - mean[k]) / se;
            if (z > worst_z) {
                worst_z = z;
                worst_idx = k;
            }
            if (z > 3.0) pass = false;
        }
        for (int a = 0; a < 5 * n; ++a)
            for (int b = a; b < 5 * n; ++b) {
                const double var_ab =
                    (cov(a, a) * cov(b, b) + cov(a, b) * cov(a, b)) / (reps - 1.0);
                if (var_ab <= 1e-30) {
                    if (std::abs(sample_cov(a, b) - cov(a, b)) > 1e-9) pass = false;
                    continue;
                }
                const double z = std::abs(sample_cov(a, b) - cov(a, b)) / std::sqrt(var_ab);
                if (z > 3.0) pass = false;
            }
        char buf[128];
        std::snprintf(buf, sizeof(buf), "N=%d worst mean z=%.2f (idx %d); ", n, worst_z,
                      worst_idx);
        detail += buf;
    }
    const double secs = seconds_since(t0);
    if (secs > 120.0) pass = false;
    detail += "runtime " + std::to_string(secs) + "s (budget 120s)";
    report(1, "moment-oracle equivalence", pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 2: Jacobian vs central finite differences.
void criterion_2() {
    const auto t0 = Clock::now();
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ModelParams params;
    double worst = 0.0;

    for (const int n : {1, 2, 5}) {
        const auto country = make_country(n);
        const auto spec = random_spec(n, 300 + n);
        for (int rep = 0; rep < 50; ++rep) {
            PolicyMultipliers theta = unit_theta(n);
            for (int j = 0; j < n; ++j) {
                if (u(gen) < 0.3) theta.theta_m[j] = params.theta_m_low;
                if (u(gen) < 0.3) theta.theta_s[j] = params.theta_s_low;
                if (u(gen) < 0.3) theta.theta_t[j] = params.theta_t_low;
            }
            const auto mob = mobility::effective_mobility(spec, theta, params);
            LatentState x = LatentState::zero(n);
            for (int j = 0; j < n; ++j) {
                x.i[j] = 1e3 + 2e4 * u(gen);
                x.r[j] = 1e4 * u(gen);
                x.d[j] = 1e3 * u(gen);
                x.s[j] = country.populations[j] - x.i[j] - x.r[j] - x.d[j];
                x.beta0[j] = 0.05 + 0.3 * u(gen);
            }
            const MatrixXd jac = dynamics::jacobian(x, theta, mob, country, params);
            const VectorXd base = x.stacked();
            MatrixXd fd(5 * n, 5 * n);
            for (int k = 0; k < 5 * n; ++k) {
                const double h = 1e-5 * std::max(std::abs(base[k]), 1.0);
                VectorXd hi = base, lo = base;
                hi[k] += h;
                lo[k] -= h;
                fd.col(k) =
                    (dynamics::conditional_mean(LatentState::from_stacked(hi), theta, mob,
                                                country, params) -
                     dynamics::conditional_mean(LatentState::from_stacked(lo), theta, mob,
                                                country, params)) /
                    (2.0 * h);
            }
            worst = std::max(worst,
                             (jac - fd).cwiseAbs().maxCoeff() / jac.cwiseAbs().maxCoeff());
        }
    }
    const double secs = seconds_since(t0);
    const bool pass = worst < 1e-6 && secs <= 10.0;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max relative error %.3g (< 1e-6), runtime %.2fs (budget 10s)",
                  worst, secs);
    report(2, "jacobian correctness", pass, buf);
}

// ---------------------------------------------------------------------------
// Criterion 3: conservation under mean propagation; omega column sums.
void criterion_3() {
    const ModelParams params;
    const int n = 5;
    const auto country = make_country(n);
    const auto spec = random_spec(n, 11);
    PolicyMultipliers theta = unit_theta(n);
    theta.theta_s[2] = params.theta_s_low;
    theta.theta_t[4] = params.theta_t_low;
    const auto mob = mobility::effective_mobility(spec, theta, params);

    LatentState x = LatentState::zero(n);
    x.i.setConstant(1e4);
    x.s = country.populations - x.i;
    x.beta0.setConstant(params.beta_bar);
    const VectorXd before = x.d + x.s + x.i + x.r;
    for (int step = 0; step < 300; ++step)
        x = LatentState::from_stacked(dynamics::conditional_mean(x, theta, mob, country, params));
    const VectorXd after = x.d + x.s + x.i + x.r;
    const double drift = ((after - before).cwiseAbs().cwiseQuotient(before)).maxCoeff();

    const double col_sum = mob.omega.colwise().sum().cwiseAbs().maxCoeff();
    const double omega_scale = std::max(mob.omega.cwiseAbs().maxCoeff(), 1.0);

    const bool pass = drift < 1e-9 && col_sum < 1e-12 * omega_scale;
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "population drift %.3g (< 1e-9), omega column sum %.3g (< 1e-12 rel)", drift,
                  col_sum / omega_scale);
    report(3, "conservation", pass, buf);
}

// ---------------------------------------------------------------------------
// Criterion 4: N=5 with no mobility equals 5 independent single-state models.
void criterion_4() {
    const int n = 5;
    ModelParams params;
    params.rho = 0.0;  // shocks decoupled as well
    const auto country = make_country(n);
    const auto spec = mobility::MobilitySpec::zero(n);
    const auto theta = unit_theta(n);
    const auto mob = mobility::effective_mobility(spec, theta, params);
    const Date start = Date::parse("2020-02-12");

    // One panel whose states are genuinely independent.
    const auto trajectory = sim::simulate(sim::seed_state(country, params, 500.0),
                                          PolicyCalendar{}, spec, country, params, start, 120, 31);
    const auto panel = sim::to_death_panel(trajectory, country);

    // Moment reduction at a heterogeneous test point.
    LatentState x = LatentState::zero(n);
    for (int j = 0; j < n; ++j) {
        x.i[j] = 1e3 * (j + 1);
        x.d[j] = 10.0 * j;
        x.r[j] = 2e3 * j;
        x.s[j] = country.populations[j] - x.i[j] - x.d[j] - x.r[j];
        x.beta0[j] = 0.08 + 0.04 * j;
    }
    const VectorXd mean5 = dynamics::conditional_mean(x, theta, mob, country, params);
    const MatrixXd cov5 = dynamics::conditional_cov(x, theta, mob, country, params);

    double worst = 0.0;
    const auto single = make_country(1);
    const auto mob1 = mobility::effective_mobility(mobility::MobilitySpec::zero(1),
                                                   unit_theta(1), params);
    double loglik_sum = 0.0;
    for (int j = 0; j < n; ++j) {
        LatentState xj = LatentState::zero(1);
        xj.d[0] = x.d[j];
        xj.s[0] = x.s[j];
        xj.i[0] = x.i[j];
        xj.r[0] = x.r[j];
        xj.beta0[0] = x.beta0[j];
        const VectorXd mean1 = dynamics::conditional_mean(xj, unit_theta(1), mob1, single, params);
        const MatrixXd cov1 = dynamics::conditional_cov(xj, unit_theta(1), mob1, single, params);
        for (int a = 0; a < 5; ++a) {
            worst = std::max(worst, std::abs(mean5[a * n + j] - mean1[a]) /
                                        std::max(std::abs(mean1[a]), 1.0));
            for (int b = 0; b < 5; ++b)
                worst = std::max(worst, std::abs(cov5(a * n + j, b * n + j) - cov1(a, b)) /
                                            std::max(std::abs(cov1(a, b)), 1.0));
        }

        // Per-state filter on that state's column alone.
        estimation::DeathPanel sub;
        sub.dates = panel.dates;
        sub.states = {country.state_codes[j]};
        sub.raw = panel.raw.col(j);
        sub.adjusted = sub.raw;
        const filter::EpidemicModel model1(single, params, PolicyCalendar{},
                                           mobility::MobilitySpec::zero(1), start);
        filter::FilterOptions opts;
        opts.meas_sd = params.meas_sd;
        opts.store_history = false;
        loglik_sum += run_filter(model1, filter::death_observations(sub.dates, sub.adjusted),
                                 filter::initial_belief(single, params, start), opts)
                          .total_loglik;
    }

    const filter::EpidemicModel model5(country, params, PolicyCalendar{}, spec, start);
    filter::FilterOptions opts;
    opts.meas_sd = params.meas_sd;
    opts.store_history = false;
    const double loglik5 =
        run_filter(model5, filter::death_observations(panel.dates, panel.adjusted),
                   filter::initial_belief(country, params, start), opts)
            .total_loglik;
    const double ll_gap = std::abs(loglik5 - loglik_sum) / std::abs(loglik_sum);

    const bool pass = worst < 1e-10 && ll_gap < 1e-10;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "moment gap %.3g, loglik gap %.3g (both < 1e-10)", worst,
                  ll_gap);
    report(4, "zero-mobility reduction", pass, buf);
}

// ---------------------------------------------------------------------------
// Criterion 5: linear-Gaussian oracle.
class LinearModel : public filter::TransitionModel {
public:
    LinearModel(MatrixXd f, VectorXd c, MatrixXd q)
        : f_(std::move(f)), c_(std::move(c)), q_(std::move(q)) {}
    int dim() const override { return static_cast<int>(c_.size()); }
    void step(int, const VectorXd& x, VectorXd& mean, MatrixXd& jac,
              MatrixXd& noise) const override {
        mean = f_ * x + c_;
        jac = f_;
        noise = q_;
    }

private:
    MatrixXd f_;
    VectorXd c_;
    MatrixXd q_;
};

void criterion_5() {
    std::mt19937_64 gen(1234);
    std::normal_distribution<double> g(0.0, 1.0);
    const int dim = 10, horizon = 15;  // 2-state shaped: 5 blocks x 2 states
    auto rand_mat = [&](int r, int c) {
        MatrixXd m(r, c);
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < c; ++b) m(a, b) = g(gen);
        return m;
    };
    oracle::LinearSystem sys;
    sys.f = rand_mat(dim, dim);
    sys.f *= 0.92 / sys.f.eigenvalues().cwiseAbs().maxCoeff();
    sys.c = rand_mat(dim, 1);
    const MatrixXd a = rand_mat(dim, dim);
    sys.q = a * a.transpose() / dim + 0.05 * MatrixXd::Identity(dim, dim);
    sys.obs_rows = {0, 1};
    sys.meas_sd = 0.2;
    sys.m0 = rand_mat(dim, 1);
    const MatrixXd b = rand_mat(dim, dim);
    sys.p0 = b * b.transpose() / dim + 0.1 * MatrixXd::Identity(dim, dim);
    sys.horizon = horizon;

    MatrixXd obs(horizon, 2);
    {
        std::mt19937_64 gen2(55);
        std::normal_distribution<double> g2(0.0, 1.0);
        const Eigen::LLT<MatrixXd> lq(sys.q), lp(sys.p0);
        VectorXd z(dim);
        auto draw = [&](const Eigen::LLT<MatrixXd>& l, const VectorXd& mean) {
            for (int k = 0; k < dim; ++k) z[k] = g2(gen2);
            return VectorXd(mean + l.matrixL() * z);
        };
        VectorXd x = draw(lp, sys.m0);
        for (int t = 0; t < horizon; ++t) {
            if (t > 0) x = draw(lq, VectorXd(sys.f * x + sys.c));
            obs(t, 0) = x[0] + sys.meas_sd * g2(gen2);
            obs(t, 1) = x[1] + sys.meas_sd * g2(gen2);
        }
    }
    const auto moments = oracle::condition(sys, obs);

    const LinearModel model(sys.f, sys.c, sys.q);
    filter::GaussianBelief init{sys.m0, sys.p0, Date::parse("2020-02-12")};
    std::vector<filter::Observation> observations(horizon);
    for (int t = 0; t < horizon; ++t)
        observations[static_cast<size_t>(t)] = {init.date + t, sys.obs_rows,
                                                obs.row(t).transpose()};
    filter::FilterOptions opts;
    opts.meas_sd = sys.meas_sd;
    const auto fo = run_filter(model, observations, init, opts);
    const auto rts = filter::rts_smooth(fo);
    const auto bf = filter::bf_smooth(fo);

    double filter_gap = std::abs(fo.total_loglik - moments.total_loglik);
    double smoother_gap = 0.0, cross_gap = 0.0;
    for (int t = 0; t < horizon; ++t) {
        const auto ts = static_cast<size_t>(t);
        filter_gap = std::max(filter_gap,
                              (fo.steps[ts].x_filt - moments.filtered_means[ts]).cwiseAbs().maxCoeff());
        filter_gap = std::max(filter_gap,
                              (fo.steps[ts].p_filt - moments.filtered_covs[ts]).cwiseAbs().maxCoeff());
        smoother_gap = std::max(smoother_gap,
                                (rts.means[ts] - moments.smoothed_means[ts]).cwiseAbs().maxCoeff());
        smoother_gap = std::max(smoother_gap,
                                (rts.covs[ts] - moments.smoothed_covs[ts]).cwiseAbs().maxCoeff());
        smoother_gap = std::max(smoother_gap,
                                (bf.means[ts] - moments.smoothed_means[ts]).cwiseAbs().maxCoeff());
        const double scale = std::max(1.0, rts.means[ts].cwiseAbs().maxCoeff());
        cross_gap = std::max(cross_gap,
                             (bf.means[ts] - rts.means[ts]).cwiseAbs().maxCoeff() / scale);
    }
    const bool pass = filter_gap < 1e-8 && smoother_gap < 1e-8 && cross_gap < 1e-6 &&
                      bf.max_inverted_dim == 2;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "filter gap %.3g, smoother gap %.3g (< 1e-8), RTS-BF gap %.3g (< 1e-6), "
                  "BF inversion dim %d",
                  filter_gap, smoother_gap, cross_gap, bf.max_inverted_dim);
    report(5, "linear-Gaussian filter oracle", pass, buf);
}

// ---------------------------------------------------------------------------
// Shared 51-state synthetic instance for criteria 6 and 9.
struct UsLike {
    Country country;
    ModelParams params;
    PolicyCalendar calendar;
    mobility::MobilitySpec spec;
    estimation::DeathPanel panel;
    Date start = Date::parse("2020-02-12");
};

UsLike build_us_like(int days, std::uint64_t seed) {
    UsLike us;
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 51;
    for (int j = 0; j < n; ++j) us.country.state_codes.push_back("S" + std::to_string(j));
    us.country.populations = VectorXd(n);
    for (int j = 0; j < n; ++j)
        us.country.populations[j] = 6e5 * std::exp(2.5 * u(gen));  // 0.6M .. 7.3M

    us.spec = mobility::MobilitySpec::zero(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            if (u(gen) < 0.15) us.spec.w_trav(a, b) = 0.002 * u(gen);
            if (u(gen) < 0.10) us.spec.w_com(a, b) = 0.01 * u(gen);
        }

    const Date mask_first = Date::parse("2020-03-15");
    for (int j = 0; j < n; ++j) {
        if (u(gen) < 0.75)
            us.calendar.add({us.country.state_codes[static_cast<size_t>(j)], PolicyKind::Mask,
                             mask_first + static_cast<int>(u(gen) * 45),
                             Date::parse("2020-11-30")});
        if (u(gen) < 0.8)
            us.calendar.add({us.country.state_codes[static_cast<size_t>(j)],
                             PolicyKind::StayHome, Date::parse("2020-03-19") +
                                 static_cast<int>(u(gen) * 10),
                             Date::parse("2020-05-01") + static_cast<int>(u(gen) * 38)});
        if (u(gen) < 0.2)
            us.calendar.add({us.country.state_codes[static_cast<size_t>(j)],
                             PolicyKind::TravelBan, Date::parse("2020-03-17"),
                             Date::parse("2020-11-30")});
    }

    const auto trajectory = sim::simulate(sim::seed_state(us.country, us.params, 50.0),
                                          us.calendar, us.spec, us.country, us.params, us.start,
                                          days, seed + 1);
    us.panel = sim::to_death_panel(trajectory, us.country);
    return us;
}

// Criterion 6: identical-policy counterfactual, joint + all 51 states.
void criterion_6() {
    const auto t0 = Clock::now();
    const auto us = build_us_like(90, 600);
    const double national_baseline = us.panel.raw.bottomRows(1).sum();

    std::vector<std::string> scopes = {""};  // joint first
    for (const auto& code : us.country.state_codes) scopes.push_back(code);

    std::vector<double> excess(scopes.size(), 0.0);
    std::vector<std::string> errors(scopes.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t k = next.fetch_add(1); k < scopes.size(); k = next.fetch_add(1)) {
            try {
                cf::Scenario same;
                same.name = scopes[k].empty() ? "identical_all" : "identical_" + scopes[k];
                same.calendar = us.calendar;
                same.scope_state = scopes[k];
                same.horizon = us.panel.dates.back();
                const auto res = cf::run_counterfactual(us.panel, us.calendar, same, us.spec,
                                                        us.country, us.params);
                excess[k] = res.national_excess;
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < n_threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    bool pass = true;
    double worst = 0.0;
    std::string err;
    for (size_t k = 0; k < scopes.size(); ++k) {
        if (!errors[k].empty()) {
            pass = false;
            err = errors[k];
            break;
        }
        worst = std::max(worst, std::abs(excess[k]) / national_baseline);
    }
    if (worst > 1e-6) pass = false;
    const double secs = seconds_since(t0);
    if (secs > 600.0) pass = false;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "52 runs, worst relative excess %.3g (< 1e-6), runtime %.1fs (budget 600s)%s%s",
                  worst, secs, err.empty() ? "" : "; error: ", err.c_str());
    report(6, "identical-policy counterfactual", pass, buf);
}

// ---------------------------------------------------------------------------
// Criterion 7: parameter recovery on synthetic panels.
void criterion_7() {
    const auto t0 = Clock::now();
    const int n = 5;
    const auto country = make_country(n);
    const ModelParams truth;  // beta_bar 0.16, sigma 0.05, rho 0.49
    const auto spec = random_spec(n, 901);
    const PolicyCalendar calendar;
    const Date start = Date::parse("2020-02-12");

    std::atomic<int> next{0};
    std::array<bool, 10> ok{};
    std::array<std::string, 10> notes;
    auto worker = [&] {
        for (int seed = next.fetch_add(1); seed < 10; seed = next.fetch_add(1)) {
            const auto trajectory =
                sim::simulate(sim::seed_state(country, truth, 1000.0), calendar, spec, country,
                              truth, start, 200, 7000 + static_cast<std::uint64_t>(seed));
            const auto panel = sim::to_death_panel(trajectory, country);

            ModelParams init = truth;
            init.beta_bar = 0.22;
            init.sigma = 0.09;
            init.rho = 0.25;
            estimation::FitBounds bounds;
            bounds.lo = {0.02, 0.005, 0.0};
            bounds.hi = {1.0, 0.5, 0.95};
            const auto fit_result =
                estimation::fit(panel, calendar, spec, country, init, bounds, {});

            const auto& est = fit_result.estimate;
            const bool good = std::abs(est.beta_bar - truth.beta_bar) <= 0.2 * truth.beta_bar &&
                              std::abs(est.sigma - truth.sigma) <= 0.5 * truth.sigma &&
                              std::abs(est.rho - truth.rho) <= 0.2;
            ok[static_cast<size_t>(seed)] = good;
            char buf[96];
            std::snprintf(buf, sizeof(buf), "seed %d: b=%.3f s=%.3f r=%.2f %s", seed,
                          est.beta_bar, est.sigma, est.rho, good ? "ok" : "MISS");
            notes[static_cast<size_t>(seed)] = buf;
        }
    };
    const unsigned n_threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < n_threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    int good = 0;
    for (bool b : ok) good += b ? 1 : 0;
    const double secs = seconds_since(t0);
    const bool pass = good >= 8 && secs <= 1800.0;
    std::string detail = std::to_string(good) + "/10 seeds recovered, runtime " +
                         std::to_string(secs) + "s (budget 1800s)";
    if (!pass)
        for (const auto& note : notes) detail += "; " + note;
    report(7, "parameter recovery", pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 8: desk-scale reproduction against a real data snapshot, when one
// is available (EPISTATE_REAL_DATA_DIR with the five input files). Without a
// snapshot the self-contained synthetic suite (criteria 1-7) substitutes.
void criterion_8(bool synthetic_ok) {
    const char* root = std::getenv("EPISTATE_REAL_DATA_DIR");
    if (root == nullptr) {
        report(8, "desk-scale reproduction", synthetic_ok,
               "no real data snapshot in environment; substituted by the synthetic suite "
               "(criteria 1-7) per the acceptance contract");
        return;
    }
    try {
        const std::filesystem::path base(root);
        io::RunConfig config;
        config.deaths_path = base / "deaths.csv";
        config.travel_path = base / "travel.csv";
        config.commute_path = base / "commute.csv";
        config.policies_path = base / "policies.csv";
        config.populations_path = base / "populations.csv";
        if (std::filesystem::exists(base / "params.txt")) config.params_path = base / "params.txt";
        const auto li = io::load_inputs(config);
        const auto panel = estimation::seasonal_adjust(li.panel);
        const Date horizon = panel.dates.back();

        // (a) smoothed deaths match the data within 3 sd per state at horizon
        const filter::EpidemicModel model(li.country, li.params, li.calendar, li.mobility,
                                          panel.dates.front());
        filter::FilterOptions opts;
        opts.meas_sd = li.params.meas_sd;
        const auto fo = run_filter(model, filter::death_observations(panel.dates, panel.adjusted),
                                   filter::initial_belief(li.country, li.params,
                                                          panel.dates.front()),
                                   opts);
        const auto smooth = filter::rts_smooth(fo);
        double death_gap = 0.0;
        for (int j = 0; j < li.country.size(); ++j)
            death_gap = std::max(death_gap, std::abs(smooth.means.back()[j] -
                                                     panel.adjusted(panel.days() - 1, j)));
        const bool a_ok = death_gap <= 3.0 * li.params.meas_sd;

        // (b) strict-all and loose-all national excess inside the Table bands
        const std::vector<PolicyKind> all = {PolicyKind::Mask, PolicyKind::StayHome,
                                             PolicyKind::TravelBan};
        const auto strict = cf::build_scenario(cf::ScenarioKind::Strict, all, "", li.calendar,
                                               li.country, horizon);
        const auto loose = cf::build_scenario(cf::ScenarioKind::Loose, all, "", li.calendar,
                                              li.country, horizon);
        const double strict_excess =
            cf::run_counterfactual(panel, li.calendar, strict, li.mobility, li.country, li.params)
                .national_excess;
        const double loose_excess =
            cf::run_counterfactual(panel, li.calendar, loose, li.mobility, li.country, li.params)
                .national_excess;
        const bool b_ok = strict_excess >= -215046.0 && strict_excess <= -137288.0 &&
                          loose_excess >= 458475.0 && loose_excess <= 1521927.0;

        // (c) mask sweep endpoints within 15% of the reference values
        const auto sweep =
            cf::mask_date_sweep(Date::parse("2020-03-19"), Date::parse("2020-03-19"), panel,
                                li.calendar, li.mobility, li.country, li.params);
        const auto sweep_end =
            cf::mask_date_sweep(Date::parse("2020-04-17"), Date::parse("2020-04-17"), panel,
                                li.calendar, li.mobility, li.country, li.params);
        const bool c_ok =
            !sweep.empty() && !sweep_end.empty() &&
            std::abs(sweep.front().national_excess - (-236551.0)) <= 0.15 * 236551.0 &&
            std::abs(sweep_end.front().national_excess - (-141048.0)) <= 0.15 * 141048.0;

        // (d) national effective R stays above one through May 2020
        bool d_ok = true;
        for (size_t t = 0; t < panel.dates.size(); ++t) {
            if (panel.dates[t] > Date::parse("2020-05-31")) break;
            const auto state = LatentState::from_stacked(smooth.means[t]);
            const auto theta = multipliers_at(li.calendar, li.params, li.country, panel.dates[t]);
            const VectorXd rt = dynamics::effective_r(state.beta0, theta.theta_m, theta.theta_s,
                                                      state.s, li.country, li.params);
            const double national =
                rt.dot(state.i) / std::max(state.i.sum(), 1.0);  // infection-weighted
            if (national <= 1.0) d_ok = false;
        }

        char buf[240];
        std::snprintf(buf, sizeof(buf),
                      "(a) death gap %.4g %s; (b) strict %.0f loose %.0f %s; (c) %s; (d) %s",
                      death_gap, a_ok ? "ok" : "MISS", strict_excess, loose_excess,
                      b_ok ? "ok" : "MISS", c_ok ? "ok" : "MISS", d_ok ? "ok" : "MISS");
        report(8, "desk-scale reproduction", a_ok && b_ok && c_ok && d_ok, buf);
    } catch (const std::exception& e) {
        report(8, "desk-scale reproduction", false, std::string("failed: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Criterion 9: performance budgets.
void criterion_9() {
    const auto us = build_us_like(293, 901);

    const auto t0 = Clock::now();
    const filter::EpidemicModel model(us.country, us.params, us.calendar, us.spec, us.start);
    filter::FilterOptions opts;
    opts.meas_sd = us.params.meas_sd;
    opts.store_history = false;
    const auto fo = run_filter(model, filter::death_observations(us.panel.dates, us.panel.adjusted),
                               filter::initial_belief(us.country, us.params, us.start), opts);
    const double filter_secs = seconds_since(t0);

    const auto t1 = Clock::now();
    const auto scenario =
        cf::build_scenario(cf::ScenarioKind::Strict,
                           {PolicyKind::Mask, PolicyKind::StayHome, PolicyKind::TravelBan}, "",
                           us.calendar, us.country, us.panel.dates.back());
    const auto res =
        cf::run_counterfactual(us.panel, us.calendar, scenario, us.spec, us.country, us.params);
    const double cf_secs = seconds_since(t1);

    const bool pass = filter_secs < 60.0 && cf_secs < 300.0 && std::isfinite(fo.total_loglik) &&
                      std::isfinite(res.national_excess);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "51-state 293-day filter %.1fs (< 60s); joint 510-dim counterfactual %.1fs "
                  "(< 300s); strict-all excess %.0f",
                  filter_secs, cf_secs, res.national_excess);
    report(9, "performance budget", pass, buf);
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8(failures == 0);  // substitution requires criteria 1-7 green
    criterion_9();
    std::printf("acceptance: %d criterion(s) failed, total runtime %.1fs\n", failures,
                seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
