#include "epistate/policy.hpp"

#include <algorithm>

namespace epistate {

const char* to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Mask: return "MASK";
        case PolicyKind::StayHome: return "STAY_HOME";
        case PolicyKind::TravelBan: return "TRAVEL_BAN";
    }
    return "?";
}

PolicyKind policy_kind_from_string(const std::string& token) {
    if (token == "MASK") return PolicyKind::Mask;
    if (token == "STAY_HOME") return PolicyKind::StayHome;
    if (token == "TRAVEL_BAN") return PolicyKind::TravelBan;
    throw ConfigError("unknown policy token '" + token + "'");
}

void PolicyCalendar::add(const PolicyInterval& interval) {
    if (interval.end < interval.start)
        throw ConfigError("policy interval for " + interval.state_code + "/" +
                          to_string(interval.kind) + " ends before it starts");
    PolicyInterval merged = interval;
    // Merge with any existing interval of the same (state, kind) that
    // overlaps or touches the new one.
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (it->state_code == merged.state_code && it->kind == merged.kind &&
            it->start <= merged.end + 1 && merged.start <= it->end + 1) {
            merged.start = std::min(merged.start, it->start);
            merged.end = std::max(merged.end, it->end);
            it = entries_.erase(it);
        } else {
            ++it;
        }
    }
    entries_.push_back(merged);
}

bool PolicyCalendar::active(const std::string& state_code, PolicyKind kind, Date date) const {
    for (const auto& e : entries_)
        if (e.kind == kind && e.state_code == state_code && e.start <= date && date <= e.end)
            return true;
    return false;
}

void PolicyCalendar::remove(PolicyKind kind, const std::string& state_code) {
    std::erase_if(entries_, [&](const PolicyInterval& e) {
        return e.kind == kind && (state_code.empty() || e.state_code == state_code);
    });
}

PolicyMultipliers multipliers_at(const PolicyCalendar& calendar, const ModelParams& params,
                                 const Country& country, Date date) {
    const int n = country.size();
    for (const auto& e : calendar.entries())
        if (country.index_of(e.state_code) < 0)
            throw ConfigError("policy calendar names unknown state '" + e.state_code + "'");

    PolicyMultipliers out;
    out.theta_m = VectorXd::Ones(n);
    out.theta_s = VectorXd::Ones(n);
    out.theta_t = VectorXd::Ones(n);
    for (const auto& e : calendar.entries()) {
        if (date < e.start || e.end < date) continue;
        const int j = country.index_of(e.state_code);
        switch (e.kind) {
            case PolicyKind::Mask: out.theta_m[j] = params.theta_m_low; break;
            case PolicyKind::StayHome: out.theta_s[j] = params.theta_s_low; break;
            case PolicyKind::TravelBan: out.theta_t[j] = params.theta_t_low; break;
        }
    }
    return out;
}

}  // namespace epistate
