#include "biopepad/slts_io.hpp"

#include <sstream>

namespace biopepad {

std::string slts_dot(const Slts& slts, const ProcessTree& tree) {
    std::ostringstream os;
    os << "digraph slts {\n";
    os << "  rankdir=LR;\n";
    os << "  node [shape=circle, fontsize=10];\n";
    for (std::size_t i = 0; i < slts.states.size(); ++i) {
        os << "  s" << i << " [label=\"" << state_label(slts.states[i], tree) << "\"";
        if (i == 0) os << ", penwidth=2";
        os << "];\n";
    }
    for (const auto& e : slts.edges) {
        os << "  s" << e.from << " -> s" << e.to << " [label=\"" << e.action
           << (e.phase == Phase::Start ? "+" : "-") << " r=" << format_double(e.rate)
           << " d=" << format_double(e.delay) << "\""
           << (e.phase == Phase::Complete ? ", style=dashed" : "") << "];\n";
    }
    if (slts.truncated) {
        os << "  truncated [shape=note, label=\"truncated: " << slts.truncation_reason << "\"];\n";
    }
    os << "}\n";
    return os.str();
}

nlohmann::json slts_json(const Slts& slts, const ProcessTree& tree) {
    nlohmann::json j;
    nlohmann::json states = nlohmann::json::array();
    for (std::size_t i = 0; i < slts.states.size(); ++i) {
        const auto& cfg = slts.states[i];
        nlohmann::json leaves = nlohmann::json::array();
        for (std::size_t l = 0; l < cfg.leaves.size(); ++l) {
            nlohmann::json schedule = nlohmann::json::array();
            for (const auto& entry : cfg.leaves[l].schedule) {
                schedule.push_back({{"level_at_start", entry.level_at_start},
                                    {"stoich", entry.stoich},
                                    {"action", entry.action},
                                    {"role", role_name(entry.role)}});
            }
            leaves.push_back({{"species", tree.leaf(l).species},
                              {"level", cfg.leaves[l].level},
                              {"schedule", std::move(schedule)}});
        }
        states.push_back({{"id", i},
                          {"label", state_label(cfg, tree)},
                          {"pending", pending_instances(cfg, tree)},
                          {"leaves", std::move(leaves)}});
    }
    j["states"] = std::move(states);

    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : slts.edges) {
        edges.push_back({{"from", e.from},
                         {"to", e.to},
                         {"action", e.action},
                         {"phase", phase_name(e.phase)},
                         {"rate", e.rate},
                         {"delay", e.delay}});
    }
    j["edges"] = std::move(edges);
    j["initial"] = 0;
    j["truncated"] = slts.truncated;
    if (slts.truncated) j["truncation_reason"] = slts.truncation_reason;
    return j;
}

}  // namespace biopepad
