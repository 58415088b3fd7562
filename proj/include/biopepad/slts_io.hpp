#pragma once

#include <string>

#include <json.hpp>

#include "biopepad/semantics.hpp"

namespace biopepad {

/// Graphviz rendering: nodes carry "(levels):pending" labels, start edges
/// are solid, completion edges dashed.
std::string slts_dot(const Slts& slts, const ProcessTree& tree);

/// Full document: states with schedule lists, edges with action, phase,
/// rate and delay.
nlohmann::json slts_json(const Slts& slts, const ProcessTree& tree);

}  // namespace biopepad
