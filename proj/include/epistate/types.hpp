#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "epistate/date.hpp"

namespace epistate {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Configuration problem (bad file, unknown state code, inconsistent inputs).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure inside the filter or a smoother; carries the date at
/// which the recursion broke down.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, Date when)
        : std::runtime_error(what + " at " + when.to_string()), date(when) {}
    Date date;
};

/// Scalar model constants. Defaults are the reference parameterization;
/// gamma is 1/14 (a 14-day mean infection resolution).
struct ModelParams {
    double gamma = 1.0 / 14.0;  // per-day recovery probability
    double delta = 0.0004;      // per-day death probability
    double kappa = 0.001;       // mean-reversion speed of the transmission rate
    double beta_bar = 0.16;     // long-run transmission rate per day
    double sigma = 0.05;        // transmission-rate volatility per sqrt(day)
    double rho = 0.49;          // cross-state shock correlation
    double theta_m_low = 0.58;  // transmission multiplier under a mask mandate
    double theta_s_low = 0.64;  // transmission/mobility multiplier under stay-at-home
    double theta_t_low = 0.10;  // inbound-travel multiplier under a travel ban
    double tau_com = 0.36;      // fraction of the day commuters spend in the visited state
    double tau_trav = 4.0;      // mean days a traveler spends in the visited state
    double meas_sd = 0.001;     // death-measurement standard deviation (persons)
    double dt = 1.0;            // time step in days

    /// Variance-per-infected of d_t + r_t, closed form to avoid cancellation.
    double nu() const {
        const double a = 1.0 - delta - gamma;
        return (a * a * delta + gamma * a) / (1.0 - delta);
    }
};

/// The modeled country: an ordered set of states with populations.
struct Country {
    std::vector<std::string> state_codes;
    VectorXd populations;

    int size() const { return static_cast<int>(state_codes.size()); }

    /// Index of a state code, or -1 if unknown.
    int index_of(const std::string& code) const {
        for (int j = 0; j < size(); ++j)
            if (state_codes[j] == code) return j;
        return -1;
    }
};

/// Per-state compartments plus the latent transmission rate; the stacked
/// state vector is [D, S, I, R, beta0], each block of length N.
struct LatentState {
    VectorXd d, s, i, r, beta0;

    int states() const { return static_cast<int>(d.size()); }

    static LatentState zero(int n) {
        LatentState x;
        x.d = VectorXd::Zero(n);
        x.s = VectorXd::Zero(n);
        x.i = VectorXd::Zero(n);
        x.r = VectorXd::Zero(n);
        x.beta0 = VectorXd::Zero(n);
        return x;
    }

    VectorXd stacked() const {
        const int n = states();
        VectorXd v(5 * n);
        v.segment(0 * n, n) = d;
        v.segment(1 * n, n) = s;
        v.segment(2 * n, n) = i;
        v.segment(3 * n, n) = r;
        v.segment(4 * n, n) = beta0;
        return v;
    }

    static LatentState from_stacked(const VectorXd& v) {
        const int n = static_cast<int>(v.size()) / 5;
        LatentState x;
        x.d = v.segment(0 * n, n);
        x.s = v.segment(1 * n, n);
        x.i = v.segment(2 * n, n);
        x.r = v.segment(3 * n, n);
        x.beta0 = v.segment(4 * n, n);
        return x;
    }
};

}  // namespace epistate
