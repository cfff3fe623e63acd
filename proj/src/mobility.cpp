#include "epistate/mobility.hpp"

namespace epistate::mobility {

namespace {

void require_square(const MatrixXd& w, const char* name) {
    if (w.rows() != w.cols())
        throw std::invalid_argument(std::string(name) + " must be square");
}

}  // namespace

MatrixXd effective_travel(const MatrixXd& w_trav, const VectorXd& theta_t,
                          const VectorXd& theta_s, double tau_trav) {
    require_square(w_trav, "w_trav");
    if (theta_t.size() != w_trav.cols() || theta_s.size() != w_trav.cols())
        throw std::invalid_argument("theta vectors do not match mobility dimension");
    return tau_trav * w_trav * (theta_t.cwiseProduct(theta_s)).asDiagonal();
}

MatrixXd effective_commute(const MatrixXd& w_com, const VectorXd& theta_s) {
    require_square(w_com, "w_com");
    if (theta_s.size() != w_com.cols())
        throw std::invalid_argument("theta vector does not match mobility dimension");
    return w_com * theta_s.asDiagonal();
}

MatrixXd omega_travel(const MatrixXd& w_trav_t) {
    require_square(w_trav_t, "w_trav_t");
    VectorXd row_sums = w_trav_t.rowwise().sum();
    MatrixXd omega = w_trav_t.transpose();
    omega -= MatrixXd(row_sums.asDiagonal());
    return omega;
}

MatrixXd omega_commute(const MatrixXd& w_com_t, double tau_com) {
    return tau_com * omega_travel(w_com_t);
}

EffectiveMobility effective_mobility(const MobilitySpec& spec, const PolicyMultipliers& theta,
                                     const ModelParams& params) {
    EffectiveMobility eff;
    eff.w_trav_t = effective_travel(spec.w_trav, theta.theta_t, theta.theta_s, params.tau_trav);
    eff.w_com_t = effective_commute(spec.w_com, theta.theta_s);
    eff.omega = omega_travel(eff.w_trav_t) + omega_commute(eff.w_com_t, params.tau_com);
    return eff;
}

MatrixXd flow_cov(const MatrixXd& w, const VectorXd& z, double tau) {
    require_square(w, "w");
    if (z.size() != w.rows())
        throw std::invalid_argument("population vector does not match mobility dimension");
    const MatrixXd wt = w.transpose();
    MatrixXd c = -w.cwiseProduct(z * VectorXd::Ones(z.size()).transpose()) -
                 wt.cwiseProduct(VectorXd::Ones(z.size()) * z.transpose());
    c += MatrixXd((wt * z + (w.rowwise().sum()).cwiseProduct(z)).asDiagonal());
    return tau * tau * c;
}

MatrixXd infection_product_cov(const MatrixXd& w_com_t, const MatrixXd& w_trav_t,
                               const VectorXd& s, const VectorXd& i, double tau_com,
                               const MatrixXd& omega) {
    const MatrixXd ci = flow_cov(w_com_t, i, tau_com) + flow_cov(w_trav_t, i, 1.0);
    const MatrixXd cs = flow_cov(w_com_t, s, tau_com) + flow_cov(w_trav_t, s, 1.0);
    const int n = static_cast<int>(s.size());
    const MatrixXd mixed = MatrixXd::Identity(n, n) + omega;
    const VectorXd ms = mixed * s;
    const VectorXd mi = mixed * i;
    return ci.cwiseProduct(cs) + ci.cwiseProduct(ms * ms.transpose()) +
           cs.cwiseProduct(mi * mi.transpose());
}

}  // namespace epistate::mobility
