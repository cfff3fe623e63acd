#pragma once

#include <cstdint>

#include "epistate/mobility.hpp"
#include "epistate/policy.hpp"
#include "epistate/types.hpp"

namespace epistate::dynamics {

using mobility::EffectiveMobility;

/// First two conditional moments of the stacked state.
struct MomentPair {
    VectorXd mean;  // 5N
    MatrixXd cov;   // 5N x 5N, symmetric PSD after repair
};

/// Cross-state shock correlation matrix: ones on the diagonal, rho elsewhere.
MatrixXd shock_correlation(int n, double rho);

/// Feasible projection of a state: beta floored at 0; negative I and R moved
/// into S, a negative S remainder into R, so per-state totals persist and D
/// stays untouched. Filter updates can step outside the feasible region; all
/// transition moments are evaluated at this projection.
LatentState clamp_state(const LatentState& x);

/// Expected new infections per state:
///   theta_S o theta_M o beta0 o (1/p) o ((Id+Omega) I) o ((Id+Omega) S).
VectorXd new_infection_mean(const LatentState& x, const PolicyMultipliers& theta,
                            const EffectiveMobility& mob, const Country& country);

/// One-step conditional mean of the stacked state. Negative predicted beta
/// entries are clamped to 0; negative predicted compartments are clamped with
/// the shortfall absorbed by S (D untouched) so per-state totals persist.
VectorXd conditional_mean(const LatentState& x, const PolicyMultipliers& theta,
                          const EffectiveMobility& mob, const Country& country,
                          const ModelParams& params);

/// Conditional variance of new infections (the Theta matrix):
///   (a a') o D(W_com,W_trav,S,I,tau_com,Omega) + d(a o (Id+Omega)I o (Id+Omega)S),
/// with a = theta_S o theta_M o beta0 o (1/p).
MatrixXd theta_cov(const VectorXd& s, const VectorXd& i, const VectorXd& beta0,
                   const PolicyMultipliers& theta, const EffectiveMobility& mob,
                   const Country& country, const ModelParams& params);

/// One-step conditional covariance of the stacked state (5x5 block layout
/// over D,S,I,R,beta).
MatrixXd conditional_cov(const LatentState& x, const PolicyMultipliers& theta,
                         const EffectiveMobility& mob, const Country& country,
                         const ModelParams& params);

/// Jacobian of the one-step conditional mean with respect to the stacked
/// state (of the smooth map, before clamping).
MatrixXd jacobian(const LatentState& x, const PolicyMultipliers& theta,
                  const EffectiveMobility& mob, const Country& country,
                  const ModelParams& params);

/// Per-state effective reproduction number:
///   R_j = theta_M[j] theta_S[j] * beta0[j]/(delta+gamma) * S[j]/p[j].
VectorXd effective_r(const VectorXd& beta0, const VectorXd& theta_m, const VectorXd& theta_s,
                     const VectorXd& s, const Country& country, const ModelParams& params);

/// One exact stochastic step of the micro model: Poisson traveler/commuter
/// flows, Poisson infections at the flow-adjusted rate, binomial deaths and
/// recoveries, correlated Gaussian transmission-rate step clamped at zero.
/// Deterministic given the generator state; compartments must be
/// integer-valued.
LatentState micro_step(const LatentState& x, const PolicyMultipliers& theta,
                       const EffectiveMobility& mob, const Country& country,
                       const ModelParams& params, std::uint64_t seed);

class Rng;  // forward declaration; defined in dynamics.cpp

/// Same as the seed overload but advances a caller-owned generator, for
/// multi-step trajectories.
LatentState micro_step(const LatentState& x, const PolicyMultipliers& theta,
                       const EffectiveMobility& mob, const Country& country,
                       const ModelParams& params, Rng& rng);

/// Mersenne-twister wrapper so trajectory code does not depend on <random>
/// in headers.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    ~Rng();
    Rng(const Rng&) = delete;
    Rng& operator=(const Rng&) = delete;
    struct Impl;
    Impl& impl() { return *impl_; }

private:
    Impl* impl_;
};

/// Symmetrize and, when Cholesky detects a negative eigenvalue, clip the
/// spectrum at zero.
void repair_psd(MatrixXd& p, double tol = 1e-8);

/// Symmetric PSD square root with eigenvalues floored at zero.
MatrixXd psd_sqrt(const MatrixXd& p);

}  // namespace epistate::dynamics
