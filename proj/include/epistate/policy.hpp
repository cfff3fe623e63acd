#pragma once

#include <string>
#include <vector>

#include "epistate/date.hpp"
#include "epistate/types.hpp"

namespace epistate {

enum class PolicyKind { Mask, StayHome, TravelBan };

const char* to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& token);

struct PolicyInterval {
    std::string state_code;
    PolicyKind kind;
    Date start;
    Date end;  // inclusive
};

/// Dated policy intervals per (state, kind). Overlapping or touching
/// intervals for the same state and kind are merged on insertion.
class PolicyCalendar {
public:
    void add(const PolicyInterval& interval);

    bool active(const std::string& state_code, PolicyKind kind, Date date) const;

    const std::vector<PolicyInterval>& entries() const { return entries_; }

    /// Earliest start over all intervals, or nullopt-like sentinel handling
    /// is left to callers; empty calendars have no span.
    bool empty() const { return entries_.empty(); }

    /// Drop every interval of `kind` for the given state (all states if
    /// state_code is empty).
    void remove(PolicyKind kind, const std::string& state_code = "");

private:
    std::vector<PolicyInterval> entries_;
};

/// Per-state policy multipliers for one date; each entry is theta_low while
/// the policy is active and 1 otherwise.
struct PolicyMultipliers {
    VectorXd theta_m, theta_s, theta_t;
};

/// Evaluate the three multiplier vectors at `date`. Throws ConfigError if the
/// calendar names a state that is not in `country`.
PolicyMultipliers multipliers_at(const PolicyCalendar& calendar, const ModelParams& params,
                                 const Country& country, Date date);

}  // namespace epistate
