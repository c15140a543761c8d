#pragma once

#include <string>

#include <json.hpp>

#include "flowmon/mcps.hpp"

namespace flowmon {

/// Machine-readable form of a polling scheme: poll-all switches with their
/// assigned controller, the flow→switch map for single-flow queries, and the
/// total cost. Keys serialize in sorted order, so output is byte-stable.
inline nlohmann::json scheme_to_json(const PollingScheme& scheme) {
  nlohmann::json j;
  j["poll_alls"] = nlohmann::json::array();
  for (const auto& target : scheme.poll_alls)
    j["poll_alls"].push_back({{"switch", target.switch_id}, {"controller", target.controller}});
  j["poll_singles"] = nlohmann::json::object();
  for (const auto& [flow_id, target] : scheme.poll_singles)
    j["poll_singles"][flow_id] = target.switch_id;
  j["total_cost"] = scheme.total_cost;
  return j;
}

inline std::string scheme_to_string(const PollingScheme& scheme) {
  return scheme_to_json(scheme).dump(2) + "\n";
}

}  // namespace flowmon
