#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "biopepad/model.hpp"

namespace biopepad {

/// Whether an action starts or completes.
enum class Phase { Start, Complete };
const char* phase_name(Phase p);

/// Product capacity check at action start. Strict keeps levels within
/// [0, N] even after pending products land; Literal only bounds the current
/// level plus pending products, which can overshoot N by the stoichiometry
/// at completion.
enum class CapacityMode { Strict, Literal };

/// Static shape of the process: cooperation structure and one slot per
/// species leaf. Only leaf payloads (level, schedule) evolve.
class ProcessTree {
public:
    struct LeafInfo {
        SpeciesId species;
        std::size_t component_index = 0;
        std::int64_t max_level = 0;
        std::int64_t init_level = 0;
    };

    /// Compiles the initial process of a validated spec. Throws
    /// std::invalid_argument on structural problems validation would report.
    static ProcessTree compile(const SystemSpec& spec);

    std::size_t leaf_count() const { return leaves_.size(); }
    const LeafInfo& leaf(std::size_t i) const { return leaves_[i]; }
    const std::vector<LeafInfo>& leaves() const { return leaves_; }

    struct Node {
        int left = -1;
        int right = -1;
        std::vector<ActionId> coop_set;  // sorted
        int leaf = -1;                   // >= 0 for leaves

        bool is_leaf() const { return leaf >= 0; }
        bool in_coop_set(const ActionId& a) const;
    };
    const Node& node(std::size_t i) const { return nodes_[i]; }
    std::size_t root() const { return root_; }

private:
    std::vector<Node> nodes_;
    std::vector<LeafInfo> leaves_;
    std::size_t root_ = 0;
};

/// Dynamic part of a process configuration: per-leaf level and FIFO
/// schedule of running action instances, in tree leaf order.
struct LeafState {
    std::int64_t level = 0;
    std::vector<ScheduleEntry> schedule;

    bool operator==(const LeafState&) const = default;
};

struct Configuration {
    std::vector<LeafState> leaves;

    bool operator==(const Configuration&) const = default;
};

struct ConfigurationHash {
    std::size_t operator()(const Configuration& c) const;
};

/// The initial configuration: tree leaf levels with empty schedules.
Configuration initial_configuration(const ProcessTree& tree);

// Schedule-list helpers. Lists are FIFO: entries append at the back and the
// oldest matching entry is the one extracted.
const ScheduleEntry* first_scheduled(const ActionId& action, const std::vector<ScheduleEntry>& list);
std::vector<ScheduleEntry> drop_first_scheduled(const ActionId& action,
                                                std::vector<ScheduleEntry> list);
std::vector<ScheduleEntry> product_entries(const std::vector<ScheduleEntry>& list);
std::int64_t scheduled_level_sum(const std::vector<ScheduleEntry>& list);

/// One derivation of the start or completion relation: the action, the
/// quantitative context (cooperation order) and the successor configuration.
struct Derivation {
    ActionId action;
    RateContext ctx;
    Configuration successor;
};

std::vector<Derivation> start_transitions(const Configuration& cfg, const ProcessTree& tree,
                                          const SystemSpec& spec,
                                          CapacityMode capacity = CapacityMode::Strict);

/// Completions of currently running instances; the context carries the
/// levels stored at start time. Throws std::logic_error on configurations
/// where a synchronized action is pending on one side only.
std::vector<Derivation> completion_transitions(const Configuration& cfg, const ProcessTree& tree,
                                               const SystemSpec& spec);

struct TransitionLabel {
    ActionId action;
    Phase phase = Phase::Start;
    double rate = 0.0;
    double delay = 0.0;
    RateContext ctx;
};

struct Transition {
    TransitionLabel label;
    Configuration successor;
};

/// Start and completion derivations labelled with rate and delay. Start
/// derivations whose rate evaluates to zero cannot fire and are omitted.
std::vector<Transition> stochastic_transitions(const Configuration& cfg, const ProcessTree& tree,
                                               const SystemSpec& spec,
                                               CapacityMode capacity = CapacityMode::Strict);

/// States compare in canonical form: product entries record the leaf's
/// current level (their stored level is not observable through rates, which
/// are recomputed from reactant and activator entries).
Configuration canonical_configuration(Configuration cfg, const ProcessTree& tree);

/// Number of running action instances, counting a synchronized instance
/// once across all participating leaves.
std::int64_t pending_instances(const Configuration& cfg, const ProcessTree& tree);

/// "(l1,l2,...):m" node label.
std::string state_label(const Configuration& cfg, const ProcessTree& tree);

struct ExploreLimits {
    std::size_t max_states = 1'000'000;
    std::size_t max_pending_per_species = 4096;
};

struct Slts {
    struct Edge {
        std::size_t from = 0;
        std::size_t to = 0;
        ActionId action;
        Phase phase = Phase::Start;
        double rate = 0.0;
        double delay = 0.0;
    };

    std::vector<Configuration> states;  // canonical; index 0 is the initial state
    std::vector<Edge> edges;            // sorted by (from, action, phase, to)
    bool truncated = false;
    std::string truncation_reason;
};

/// Breadth-first closure of the stochastic relation from the initial
/// configuration, deduplicating canonical states. Exploration stops with
/// `truncated` set when a limit is hit; the partial result is returned.
Slts explore_slts(const SystemSpec& spec, const ProcessTree& tree,
                  const ExploreLimits& limits = {}, CapacityMode capacity = CapacityMode::Strict);

}  // namespace biopepad
