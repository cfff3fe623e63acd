#include "epistate/validate.hpp"

#include <set>
#include <sstream>

namespace epistate {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void check_matrix(const MatrixXd& w, const char* name, const Country& country,
                  std::vector<std::string>& out) {
    const int n = country.size();
    if (w.rows() != n || w.cols() != n) {
        out.push_back(std::string(name) + ": expected " + std::to_string(n) + "x" +
                      std::to_string(n) + " matrix");
        return;
    }
    for (int j = 0; j < n; ++j) {
        if (w(j, j) != 0.0)
            out.push_back(std::string(name) + ": nonzero diagonal entry for state " +
                          country.state_codes[j]);
        double row_sum = 0.0;
        for (int k = 0; k < n; ++k) {
            if (w(j, k) < 0.0)
                out.push_back(std::string(name) + ": negative entry at (" +
                              country.state_codes[j] + "," + country.state_codes[k] + ")");
            row_sum += w(j, k);
        }
        if (row_sum >= 1.0)
            out.push_back(std::string(name) + ": row sum for state " + country.state_codes[j] +
                          " is " + fmt(row_sum) + ", must be < 1");
    }
}

}  // namespace

std::vector<std::string> validate(const Country& country, const ModelParams& params,
                                  const PolicyCalendar& calendar,
                                  const mobility::MobilitySpec& mobility) {
    std::vector<std::string> v;

    if (country.size() < 1) v.push_back("country: needs at least one state");
    std::set<std::string> seen;
    for (const auto& code : country.state_codes)
        if (!seen.insert(code).second) v.push_back("country: duplicate state code " + code);
    if (country.populations.size() != country.size()) {
        v.push_back("country: populations/state_codes length mismatch");
    } else {
        for (int j = 0; j < country.size(); ++j)
            if (country.populations[j] <= 0.0)
                v.push_back("country: non-positive population for state " +
                            country.state_codes[j]);
    }

    auto in_open = [](double x, double lo, double hi) { return x > lo && x < hi; };
    if (!in_open(params.gamma, 0.0, 1.0)) v.push_back("params: gamma out of (0,1)");
    if (!in_open(params.delta, 0.0, 1.0)) v.push_back("params: delta out of (0,1)");
    if (params.gamma + params.delta >= 1.0) v.push_back("params: gamma + delta must be < 1");
    if (!in_open(params.kappa, 0.0, 1.0)) v.push_back("params: kappa out of (0,1)");
    if (params.beta_bar <= 0.0) v.push_back("params: beta_bar must be > 0");
    if (params.sigma <= 0.0) v.push_back("params: sigma must be > 0");
    if (params.rho < 0.0 || params.rho >= 1.0) v.push_back("params: rho out of [0,1)");
    if (!in_open(params.theta_m_low, 0.0, 1.0)) v.push_back("params: theta_m_low out of (0,1)");
    if (!in_open(params.theta_s_low, 0.0, 1.0)) v.push_back("params: theta_s_low out of (0,1)");
    if (!in_open(params.theta_t_low, 0.0, 1.0)) v.push_back("params: theta_t_low out of (0,1)");
    if (params.tau_com <= 0.0 || params.tau_com > 1.0) v.push_back("params: tau_com out of (0,1]");
    if (params.tau_trav < 1.0) v.push_back("params: tau_trav must be >= 1");
    if (params.meas_sd <= 0.0) v.push_back("params: meas_sd must be > 0");
    if (params.dt <= 0.0) v.push_back("params: dt must be > 0");

    for (const auto& e : calendar.entries()) {
        if (country.index_of(e.state_code) < 0)
            v.push_back("calendar: unknown state code " + e.state_code);
        if (e.end < e.start)
            v.push_back("calendar: interval for " + e.state_code + "/" + to_string(e.kind) +
                        " ends before it starts");
    }

    check_matrix(mobility.w_trav, "w_trav", country, v);
    check_matrix(mobility.w_com, "w_com", country, v);
    return v;
}

}  // namespace epistate
