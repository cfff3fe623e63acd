#pragma once

#include <string>
#include <vector>

#include "epistate/mobility.hpp"
#include "epistate/policy.hpp"
#include "epistate/types.hpp"

namespace epistate {

/// Every invariant violation found in the configuration, each with a
/// human-readable locus. Empty result means the configuration is valid.
std::vector<std::string> validate(const Country& country, const ModelParams& params,
                                  const PolicyCalendar& calendar,
                                  const mobility::MobilitySpec& mobility);

}  // namespace epistate
