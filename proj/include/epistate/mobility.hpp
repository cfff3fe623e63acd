#pragma once

#include "epistate/policy.hpp"
#include "epistate/types.hpp"

namespace epistate::mobility {

/// Baseline daily travel and commute fraction matrices. Row = origin state,
/// column = destination state, diagonal identically zero.
struct MobilitySpec {
    MatrixXd w_trav;
    MatrixXd w_com;

    static MobilitySpec zero(int n) {
        return {MatrixXd::Zero(n, n), MatrixXd::Zero(n, n)};
    }
};

/// Policy-scaled matrices for one date plus the combined net-flow operator.
struct EffectiveMobility {
    MatrixXd w_trav_t;  // tau_trav * W_trav * d(theta_T) * d(theta_S)
    MatrixXd w_com_t;   // W_com * d(theta_S)
    MatrixXd omega;     // Omega_trav + Omega_com; columns sum to zero
};

/// Travel matrix under policies: column j is scaled by theta_T[j]*theta_S[j]
/// and the whole matrix by tau_trav (travelers present = tau_trav days of
/// arrivals).
MatrixXd effective_travel(const MatrixXd& w_trav, const VectorXd& theta_t,
                          const VectorXd& theta_s, double tau_trav);

/// Commute matrix under stay-at-home orders: column j scaled by theta_S[j].
MatrixXd effective_commute(const MatrixXd& w_com, const VectorXd& theta_s);

/// Net-flow operator for travelers: W' - d(W 1).
MatrixXd omega_travel(const MatrixXd& w_trav_t);

/// Net-flow operator for time-weighted commuters: tau_com * (W' - d(W 1)).
MatrixXd omega_commute(const MatrixXd& w_com_t, double tau_com);

/// Assemble all date-t effective matrices from the base spec and multipliers.
EffectiveMobility effective_mobility(const MobilitySpec& spec, const PolicyMultipliers& theta,
                                     const ModelParams& params);

/// Covariance of the net Poisson flow vector induced by matrix `w` acting on
/// populations `z`, time-weighted by `tau`:
///   C(W,Z,tau) = tau^2 { -W o (Z 1') - W' o (1 Z') + d(W'Z + (W 1) o Z) }.
/// Symmetric, zero row sums, non-negative diagonal.
MatrixXd flow_cov(const MatrixXd& w, const VectorXd& z, double tau);

/// Covariance of the elementwise product of flow-adjusted infected and
/// susceptible populations:
///   D(W1,W2,S,I,tau,Omega) = CI o CS + CI o (MS MS') + CS o (MI MI'),
/// where CI = C(W1,I,tau)+C(W2,I,1), CS = C(W1,S,tau)+C(W2,S,1),
/// MI = (Id+Omega) I and MS = (Id+Omega) S.
MatrixXd infection_product_cov(const MatrixXd& w_com_t, const MatrixXd& w_trav_t,
                               const VectorXd& s, const VectorXd& i, double tau_com,
                               const MatrixXd& omega);

}  // namespace epistate::mobility
