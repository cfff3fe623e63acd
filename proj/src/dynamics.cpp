#include "epistate/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace epistate::dynamics {

MatrixXd shock_correlation(int n, double rho) {
    MatrixXd sigma = MatrixXd::Constant(n, n, rho);
    sigma.diagonal().setOnes();
    return sigma;
}

VectorXd new_infection_mean(const LatentState& x, const PolicyMultipliers& theta,
                            const EffectiveMobility& mob, const Country& country) {
    const int n = country.size();
    const MatrixXd mixed = MatrixXd::Identity(n, n) + mob.omega;
    return theta.theta_s.cwiseProduct(theta.theta_m)
        .cwiseProduct(x.beta0)
        .cwiseProduct(country.populations.cwiseInverse())
        .cwiseProduct(mixed * x.i)
        .cwiseProduct(mixed * x.s);
}

LatentState clamp_state(const LatentState& x) {
    LatentState out = x;
    for (int j = 0; j < out.states(); ++j) {
        if (out.beta0[j] < 0.0) out.beta0[j] = 0.0;
        if (out.i[j] < 0.0) { out.s[j] += out.i[j]; out.i[j] = 0.0; }
        if (out.r[j] < 0.0) { out.s[j] += out.r[j]; out.r[j] = 0.0; }
        if (out.s[j] < 0.0) { out.r[j] += out.s[j]; out.s[j] = 0.0; }
    }
    return out;
}

VectorXd conditional_mean(const LatentState& x_in, const PolicyMultipliers& theta,
                          const EffectiveMobility& mob, const Country& country,
                          const ModelParams& params) {
    const int n = country.size();
    const LatentState x = clamp_state(x_in);
    const VectorXd infections = new_infection_mean(x, theta, mob, country);

    LatentState next;
    next.d = x.d + params.delta * x.i;
    next.s = x.s - infections;
    next.i = (1.0 - params.delta - params.gamma) * x.i + infections;
    next.r = x.r + params.gamma * x.i;
    next.beta0 = x.beta0 + params.kappa * params.dt * (VectorXd::Constant(n, params.beta_bar) - x.beta0);
    return clamp_state(next).stacked();
}

MatrixXd theta_cov(const VectorXd& s_in, const VectorXd& i_in, const VectorXd& beta0_in,
                   const PolicyMultipliers& theta, const EffectiveMobility& mob,
                   const Country& country, const ModelParams& params) {
    const int n = country.size();
    const VectorXd s = s_in.cwiseMax(0.0);
    const VectorXd i = i_in.cwiseMax(0.0);
    const VectorXd beta0 = beta0_in.cwiseMax(0.0);
    const VectorXd a = theta.theta_s.cwiseProduct(theta.theta_m)
                           .cwiseProduct(beta0)
                           .cwiseProduct(country.populations.cwiseInverse());
    const MatrixXd d = mobility::infection_product_cov(mob.w_com_t, mob.w_trav_t, s, i,
                                                       params.tau_com, mob.omega);
    const MatrixXd mixed = MatrixXd::Identity(n, n) + mob.omega;
    MatrixXd out = (a * a.transpose()).cwiseProduct(d);
    out += MatrixXd(a.cwiseProduct(mixed * i).cwiseProduct(mixed * s).asDiagonal());
    return out;
}

MatrixXd conditional_cov(const LatentState& x_in, const PolicyMultipliers& theta,
                         const EffectiveMobility& mob, const Country& country,
                         const ModelParams& params) {
    const int n = country.size();
    const double delta = params.delta, gamma = params.gamma;
    const LatentState x = clamp_state(x_in);
    const MatrixXd big_theta = theta_cov(x.s, x.i, x.beta0, theta, mob, country, params);
    const MatrixXd di = x.i.asDiagonal();

    MatrixXd v = MatrixXd::Zero(5 * n, 5 * n);
    auto block = [&](int r, int c) { return v.block(r * n, c * n, n, n); };

    block(0, 0) = delta * (1.0 - delta) * di;
    block(0, 2) = -delta * (1.0 - delta - gamma) * di;
    block(0, 3) = -delta * gamma * di;
    block(1, 1) = big_theta;
    block(1, 2) = -big_theta;
    block(2, 2) = big_theta + params.nu() * di;
    block(2, 3) = -gamma * (1.0 - gamma - delta) * di;
    block(3, 3) = (gamma - gamma * gamma) * di;

    const VectorXd sqrt_beta = x.beta0.cwiseMax(0.0).cwiseSqrt();
    block(4, 4) = params.sigma * params.sigma * params.dt *
                  MatrixXd(sqrt_beta.asDiagonal()) * shock_correlation(n, params.rho) *
                  MatrixXd(sqrt_beta.asDiagonal());

    block(2, 0) = block(0, 2).transpose();
    block(3, 0) = block(0, 3).transpose();
    block(2, 1) = block(1, 2).transpose();
    block(3, 2) = block(2, 3).transpose();
    return v;
}

MatrixXd jacobian(const LatentState& x_in, const PolicyMultipliers& theta,
                  const EffectiveMobility& mob, const Country& country,
                  const ModelParams& params) {
    const int n = country.size();
    const LatentState x = clamp_state(x_in);
    const MatrixXd id = MatrixXd::Identity(n, n);
    const MatrixXd mixed = id + mob.omega;
    const VectorXd inv_p = country.populations.cwiseInverse();
    const VectorXd a = theta.theta_s.cwiseProduct(theta.theta_m).cwiseProduct(x.beta0).cwiseProduct(inv_p);
    const VectorXd mi = mixed * x.i;
    const VectorXd ms = mixed * x.s;

    // Partials of the infection term g = a o (M I) o (M S) with M = Id+Omega.
    const MatrixXd dg_ds = MatrixXd(a.cwiseProduct(mi).asDiagonal()) * mixed;
    const MatrixXd dg_di = MatrixXd(a.cwiseProduct(ms).asDiagonal()) * mixed;
    const MatrixXd dg_db = MatrixXd(theta.theta_s.cwiseProduct(theta.theta_m)
                                        .cwiseProduct(inv_p)
                                        .cwiseProduct(mi)
                                        .cwiseProduct(ms)
                                        .asDiagonal());

    MatrixXd j = MatrixXd::Zero(5 * n, 5 * n);
    auto block = [&](int r, int c) { return j.block(r * n, c * n, n, n); };
    block(0, 0) = id;
    block(0, 2) = params.delta * id;
    block(1, 1) = id - dg_ds;
    block(1, 2) = -dg_di;
    block(1, 4) = -dg_db;
    block(2, 1) = dg_ds;
    block(2, 2) = (1.0 - params.delta - params.gamma) * id + dg_di;
    block(2, 4) = dg_db;
    block(3, 2) = params.gamma * id;
    block(3, 3) = id;
    block(4, 4) = (1.0 - params.kappa * params.dt) * id;
    return j;
}

VectorXd effective_r(const VectorXd& beta0, const VectorXd& theta_m, const VectorXd& theta_s,
                     const VectorXd& s, const Country& country, const ModelParams& params) {
    return theta_m.cwiseProduct(theta_s)
        .cwiseProduct(beta0)
        .cwiseProduct(s.cwiseQuotient(country.populations)) /
        (params.delta + params.gamma);
}

struct Rng::Impl {
    std::mt19937_64 gen;
};

Rng::Rng(std::uint64_t seed) : impl_(new Impl{std::mt19937_64(seed)}) {}
Rng::~Rng() { delete impl_; }

namespace {

std::int64_t poisson(double rate, std::mt19937_64& gen) {
    if (rate <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> dist(rate);
    return dist(gen);
}

std::int64_t binomial(std::int64_t trials, double p, std::mt19937_64& gen) {
    if (trials <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return trials;
    std::binomial_distribution<std::int64_t> dist(trials, p);
    return dist(gen);
}

}  // namespace

LatentState micro_step(const LatentState& x, const PolicyMultipliers& theta,
                       const EffectiveMobility& mob, const Country& country,
                       const ModelParams& params, Rng& rng) {
    const int n = country.size();
    auto& gen = rng.impl().gen;

    // Net flow adjustments entering the infection rate. Travel stocks already
    // carry tau_trav inside w_trav_t; commuter flows are time-weighted by
    // tau_com.
    VectorXd s_adj = x.s, i_adj = x.i;
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            if (j == k) continue;
            if (mob.w_com_t(k, j) > 0.0) {
                const double fs = static_cast<double>(poisson(mob.w_com_t(k, j) * x.s[k], gen));
                const double fi = static_cast<double>(poisson(mob.w_com_t(k, j) * x.i[k], gen));
                s_adj[j] += params.tau_com * fs;
                s_adj[k] -= params.tau_com * fs;
                i_adj[j] += params.tau_com * fi;
                i_adj[k] -= params.tau_com * fi;
            }
            if (mob.w_trav_t(k, j) > 0.0) {
                const double fs = static_cast<double>(poisson(mob.w_trav_t(k, j) * x.s[k], gen));
                const double fi = static_cast<double>(poisson(mob.w_trav_t(k, j) * x.i[k], gen));
                s_adj[j] += fs;
                s_adj[k] -= fs;
                i_adj[j] += fi;
                i_adj[k] -= fi;
            }
        }
    }

    LatentState next = x;
    for (int j = 0; j < n; ++j) {
        const double rate = theta.theta_s[j] * theta.theta_m[j] * x.beta0[j] *
                            s_adj[j] * i_adj[j] / country.populations[j];
        const auto infections = poisson(std::max(rate, 0.0), gen);
        const auto infected = static_cast<std::int64_t>(std::llround(x.i[j]));
        const auto deaths = binomial(infected, params.delta, gen);
        const auto recoveries =
            binomial(infected - deaths, params.gamma / (1.0 - params.delta), gen);

        next.d[j] = x.d[j] + static_cast<double>(deaths);
        next.s[j] = x.s[j] - static_cast<double>(infections);
        next.i[j] = x.i[j] + static_cast<double>(infections - deaths - recoveries);
        next.r[j] = x.r[j] + static_cast<double>(recoveries);
    }

    // Correlated transmission-rate step: eps ~ N(0, Sigma) via Cholesky.
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd z(n);
    for (int j = 0; j < n; ++j) z[j] = normal(gen);
    const double rho = params.rho;
    VectorXd eps(n);
    if (n == 1) {
        eps = z;
    } else {
        Eigen::LLT<MatrixXd> llt(shock_correlation(n, rho));
        eps = llt.matrixL() * z;
    }
    for (int j = 0; j < n; ++j) {
        const double drift = params.kappa * params.dt * (params.beta_bar - x.beta0[j]);
        const double vol = params.sigma * std::sqrt(params.dt * std::max(x.beta0[j], 0.0));
        next.beta0[j] = std::max(x.beta0[j] + drift + vol * eps[j], 0.0);
    }
    return next;
}

LatentState micro_step(const LatentState& x, const PolicyMultipliers& theta,
                       const EffectiveMobility& mob, const Country& country,
                       const ModelParams& params, std::uint64_t seed) {
    Rng rng(seed);
    return micro_step(x, theta, mob, country, params, rng);
}

void repair_psd(MatrixXd& p, double tol) {
    p = 0.5 * (p + p.transpose()).eval();
    Eigen::LLT<MatrixXd> llt(p);
    if (llt.info() == Eigen::Success) return;
    // Roundoff-sized dips are tolerated (the innovation solve floors its own
    // spectrum); real drift gets a spectral floor at zero. A diagonal shift
    // would leak the dip into unrelated coordinates, which the near-exact
    // death measurement cannot tolerate.
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(p);
    const double scale = std::max(std::abs(p.trace()), 1.0);
    if (es.eigenvalues().minCoeff() >= -tol * scale) return;
    p = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
        es.eigenvectors().transpose();
    p = 0.5 * (p + p.transpose()).eval();
}

MatrixXd psd_sqrt(const MatrixXd& p) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (p + p.transpose()));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed in psd_sqrt");
    const VectorXd lambda = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace epistate::dynamics
