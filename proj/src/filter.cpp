#include "epistate/filter.hpp"

#include <cmath>

#include "epistate/dynamics.hpp"

namespace epistate::filter {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

MatrixXd select_rows(const MatrixXd& m, const std::vector<int>& rows) {
    MatrixXd out(rows.size(), m.cols());
    for (size_t k = 0; k < rows.size(); ++k) out.row(k) = m.row(rows[k]);
    return out;
}

MatrixXd select_cols(const MatrixXd& m, const std::vector<int>& cols) {
    MatrixXd out(m.rows(), cols.size());
    for (size_t k = 0; k < cols.size(); ++k) out.col(k) = m.col(cols[k]);
    return out;
}

}  // namespace

GaussianBelief predict(const GaussianBelief& belief, const TransitionModel& model, int t_index,
                       MatrixXd* jac_out) {
    VectorXd mean_next;
    MatrixXd jac, noise;
    model.step(t_index, belief.mean, mean_next, jac, noise);

    GaussianBelief out;
    out.date = belief.date + 1;
    out.mean = std::move(mean_next);
    out.cov = jac * belief.cov * jac.transpose() + noise;
    dynamics::repair_psd(out.cov);
    if (!out.mean.allFinite() || !out.cov.allFinite())
        throw NumericalError("non-finite state prediction", out.date);
    if (jac_out) *jac_out = std::move(jac);
    return out;
}

double update(GaussianBelief& belief, const std::vector<int>& rows, const VectorXd& values,
              double meas_sd, FilterStep* artifacts) {
    const auto m = static_cast<Eigen::Index>(rows.size());
    if (values.size() != m) throw std::invalid_argument("observation size mismatch");
    if (m == 0) return 0.0;

    const MatrixXd ph_t = select_cols(belief.cov, rows);          // P H'
    MatrixXd s = select_rows(ph_t, rows);                         // H P H'
    s.diagonal().array() += meas_sd * meas_sd;
    s = 0.5 * (s + s.transpose()).eval();

    Eigen::LDLT<MatrixXd> ldlt(s);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
        // H P H' can dip below zero by roundoff on near-singular beliefs;
        // the true innovation covariance is bounded below by the measurement
        // noise, so floor the spectrum there and retry once.
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
        if (es.info() != Eigen::Success)
            throw NumericalError("singular innovation covariance", belief.date);
        s = es.eigenvectors() *
            es.eigenvalues().cwiseMax(meas_sd * meas_sd).asDiagonal() *
            es.eigenvectors().transpose();
        ldlt.compute(s);
        if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
            throw NumericalError("singular innovation covariance", belief.date);
    }

    VectorXd innovation = values;
    for (Eigen::Index k = 0; k < m; ++k) innovation[k] -= belief.mean[rows[k]];

    const MatrixXd s_inv = ldlt.solve(MatrixXd::Identity(m, m));
    const MatrixXd gain = ph_t * s_inv;  // K = P H' S^-1

    belief.mean += gain * innovation;

    // Joseph form: P = (I-KH) P (I-KH)' + K R K', expanded so only
    // state-by-observation products appear.
    const MatrixXd khp = gain * ph_t.transpose();  // K H P
    belief.cov += -khp - khp.transpose() + gain * (s * gain.transpose());
    dynamics::repair_psd(belief.cov);

    const double quad = innovation.dot(s_inv * innovation);
    const double logdet = ldlt.vectorD().array().log().sum();
    const double loglik = -0.5 * (static_cast<double>(m) * kLog2Pi + logdet + quad);

    if (artifacts) {
        artifacts->obs_rows = rows;
        artifacts->innovation = std::move(innovation);
        artifacts->s_inv = s_inv;
        artifacts->gain = gain;
    }
    return loglik;
}

FilterOutput run_filter(const TransitionModel& model, const std::vector<Observation>& observations,
                        const GaussianBelief& init, const FilterOptions& opts) {
    if (observations.empty()) throw std::invalid_argument("no observations");
    FilterOutput out;
    if (opts.store_history) out.steps.reserve(observations.size());

    GaussianBelief belief = init;
    belief.date = observations.front().date;

    for (size_t t = 0; t < observations.size(); ++t) {
        const auto& obs = observations[t];
        if (t > 0 && obs.date - observations[t - 1].date != 1)
            throw std::invalid_argument("observations must be consecutive daily dates");

        FilterStep step;
        MatrixXd jac;
        if (t > 0) belief = predict(belief, model, static_cast<int>(t) - 1, &jac);
        step.date = obs.date;
        step.x_pred = belief.mean;
        if (opts.store_history) step.p_pred = belief.cov;

        const double ll = update(belief, obs.rows, obs.values, opts.meas_sd,
                                 opts.store_history ? &step : nullptr);
        if (!std::isfinite(ll)) throw NumericalError("non-finite likelihood increment", obs.date);
        step.loglik = ll;
        out.total_loglik += ll;
        out.max_inverted_dim =
            std::max(out.max_inverted_dim, static_cast<int>(obs.rows.size()));

        if (opts.store_history) {
            step.x_filt = belief.mean;
            step.p_filt = belief.cov;
            if (t > 0) out.steps[t - 1].jac = std::move(jac);
            out.steps.push_back(std::move(step));
        }
    }
    return out;
}

SmootherOutput rts_smooth(const FilterOutput& fo) {
    const auto& steps = fo.steps;
    if (steps.empty()) throw std::invalid_argument("filter output has no stored history");
    const auto t_last = steps.size() - 1;

    SmootherOutput out;
    out.dates.resize(steps.size());
    out.means.resize(steps.size());
    out.covs.resize(steps.size());
    out.max_inverted_dim = std::max(fo.max_inverted_dim, static_cast<int>(steps[0].x_filt.size()));

    out.dates[t_last] = steps[t_last].date;
    out.means[t_last] = steps[t_last].x_filt;
    out.covs[t_last] = steps[t_last].p_filt;

    for (size_t t = t_last; t-- > 0;) {
        const auto& next = steps[t + 1];
        MatrixXd p_pred = next.p_pred;
        Eigen::LDLT<MatrixXd> ldlt(p_pred);
        if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() < 0.0).any()) {
            p_pred.diagonal().array() += 1e-12 * std::max(p_pred.trace(), 1.0);
            ldlt.compute(p_pred);
        }
        // C = P_f J' P_pred^{-1}, computed as solve(P_pred, J P_f)'.
        const MatrixXd c = ldlt.solve(steps[t].jac * steps[t].p_filt).transpose();
        out.means[t] = steps[t].x_filt + c * (out.means[t + 1] - next.x_pred);
        out.covs[t] = steps[t].p_filt + c * (out.covs[t + 1] - next.p_pred) * c.transpose();
        dynamics::repair_psd(out.covs[t]);
        out.dates[t] = steps[t].date;
    }
    return out;
}

SmootherOutput bf_smooth(const FilterOutput& fo) {
    const auto& steps = fo.steps;
    if (steps.empty()) throw std::invalid_argument("filter output has no stored history");
    const auto dim = steps[0].x_filt.size();

    SmootherOutput out;
    out.dates.resize(steps.size());
    out.means.resize(steps.size());
    out.covs.resize(steps.size());
    out.max_inverted_dim = fo.max_inverted_dim;  // only observation-sized inverses

    VectorXd lam_tilde = VectorXd::Zero(dim);
    MatrixXd cap_tilde = MatrixXd::Zero(dim, dim);

    for (size_t t = steps.size(); t-- > 0;) {
        const auto& st = steps[t];
        out.dates[t] = st.date;
        out.means[t] = st.x_filt - st.p_filt * lam_tilde;
        out.covs[t] = st.p_filt - st.p_filt * cap_tilde * st.p_filt;
        dynamics::repair_psd(out.covs[t]);

        if (t == 0) break;

        // Measurement step of the adjoint recursion at date t, then the time
        // step back through the transition Jacobian leaving date t-1.
        VectorXd lam_hat;
        MatrixXd cap_hat;
        if (st.obs_rows.empty()) {
            lam_hat = lam_tilde;
            cap_hat = cap_tilde;
        } else {
            const auto m = static_cast<Eigen::Index>(st.obs_rows.size());
            const VectorXd w = st.s_inv * st.innovation;
            // C_hat = I - K H applied implicitly through the gain columns.
            MatrixXd c_hat = MatrixXd::Identity(dim, dim);
            for (Eigen::Index k = 0; k < m; ++k) c_hat.col(st.obs_rows[k]) -= st.gain.col(k);
            lam_hat = c_hat.transpose() * lam_tilde;
            for (Eigen::Index k = 0; k < m; ++k) lam_hat[st.obs_rows[k]] -= w[k];
            cap_hat = c_hat.transpose() * cap_tilde * c_hat;
            for (Eigen::Index a = 0; a < m; ++a)
                for (Eigen::Index b = 0; b < m; ++b)
                    cap_hat(st.obs_rows[a], st.obs_rows[b]) += st.s_inv(a, b);
        }
        const MatrixXd& jac = steps[t - 1].jac;
        lam_tilde = jac.transpose() * lam_hat;
        cap_tilde = jac.transpose() * cap_hat * jac;
    }
    return out;
}

}  // namespace epistate::filter
