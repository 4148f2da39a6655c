#pragma once

#include <string>

#include "ehsim/sim.hpp"
#include "ehsim/verify.hpp"

namespace ehsim::serialize {

// Canonical JSON for a simulation estimate. Deterministic: fixed key order,
// shortest-roundtrip doubles, no timestamps. Rerunning an identical config
// must reproduce these bytes exactly.
std::string estimate_json(const sim::SimConfig& cfg,
                          const sim::ThroughputEstimate& est);

std::string acceptance_report_json(const verify::Report& report);

}  // namespace ehsim::serialize
