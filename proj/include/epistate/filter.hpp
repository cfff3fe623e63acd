#pragma once

#include <vector>

#include "epistate/date.hpp"
#include "epistate/types.hpp"

namespace epistate::filter {

/// Gaussian belief over a state vector at one date.
struct GaussianBelief {
    VectorXd mean;
    MatrixXd cov;
    Date date;
};

/// One-step state transition supplier: conditional mean, Jacobian and
/// process noise for the step leaving date index `t_index`.
class TransitionModel {
public:
    virtual ~TransitionModel() = default;
    virtual int dim() const = 0;
    virtual void step(int t_index, const VectorXd& x, VectorXd& mean_next, MatrixXd& jac,
                      MatrixXd& noise) const = 0;
};

/// Observed coordinates at one date. `rows` index into the state vector;
/// dates with partially missing data simply list fewer rows.
struct Observation {
    Date date;
    std::vector<int> rows;
    VectorXd values;
};

struct FilterStep {
    Date date;
    VectorXd x_pred, x_filt;
    MatrixXd p_pred, p_filt;
    MatrixXd jac;  // transition Jacobian leaving this date; empty on the last step
    double loglik = 0.0;
    std::vector<int> obs_rows;
    VectorXd innovation;
    MatrixXd s_inv;  // inverse innovation covariance
    MatrixXd gain;   // K = P_pred H' S^{-1}
};

struct FilterOutput {
    std::vector<FilterStep> steps;
    double total_loglik = 0.0;
    int max_inverted_dim = 0;  // largest matrix dimension inverted anywhere
};

struct SmootherOutput {
    std::vector<Date> dates;
    std::vector<VectorXd> means;
    std::vector<MatrixXd> covs;
    int max_inverted_dim = 0;
};

struct FilterOptions {
    bool store_history = true;  // keep per-date moments for smoothing
    double meas_sd = 0.001;     // isotropic measurement noise
};

/// Prediction through the model's transition moments; covariance is
/// J P J' + Q followed by the symmetry/PSD repair.
GaussianBelief predict(const GaussianBelief& belief, const TransitionModel& model, int t_index,
                       MatrixXd* jac_out = nullptr);

/// Joseph-form linear measurement update on the listed rows with isotropic
/// measurement noise. Returns the Gaussian log-density of the innovation.
double update(GaussianBelief& belief, const std::vector<int>& rows, const VectorXd& values,
              double meas_sd, FilterStep* artifacts = nullptr);

/// Alternating predict/update over all observations. The initial belief is
/// the prior at the first observation date.
FilterOutput run_filter(const TransitionModel& model, const std::vector<Observation>& observations,
                        const GaussianBelief& init, const FilterOptions& opts = {});

/// Rauch-Tung-Striebel fixed-interval smoother (inverts state-sized
/// predicted covariances; singular ones get a ridge).
SmootherOutput rts_smooth(const FilterOutput& fo);

/// Modified Bryson-Frazier fixed-interval smoother; only inverts
/// observation-sized matrices (reused from the forward pass).
SmootherOutput bf_smooth(const FilterOutput& fo);

}  // namespace epistate::filter
