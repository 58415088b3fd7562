#include "biopepad/semantics.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace biopepad {

const char* phase_name(Phase p) {
    return p == Phase::Start ? "start" : "complete";
}

bool ProcessTree::Node::in_coop_set(const ActionId& a) const {
    return std::binary_search(coop_set.begin(), coop_set.end(), a);
}

ProcessTree ProcessTree::compile(const SystemSpec& spec) {
    ProcessTree tree;
    if (!spec.initial_process) throw std::invalid_argument("spec has no initial process");

    auto build = [&](auto&& self, const ProcessPtr& p) -> int {
        if (p->is_leaf()) {
            const auto& leaf = p->leaf();
            const SpeciesComponent* comp = spec.find_component(leaf.species);
            if (!comp)
                throw std::invalid_argument("process uses undefined species " + leaf.species);
            const SpeciesQuantity* q = spec.find_quantity(leaf.species);
            if (!q)
                throw std::invalid_argument("no quantity record for species " + leaf.species);
            LeafInfo info;
            info.species = leaf.species;
            info.component_index =
                static_cast<std::size_t>(comp - spec.components.data());
            info.max_level = q->max_level;
            info.init_level = leaf.init_level;
            tree.leaves_.push_back(std::move(info));

            Node n;
            n.leaf = static_cast<int>(tree.leaves_.size() - 1);
            tree.nodes_.push_back(std::move(n));
            return static_cast<int>(tree.nodes_.size() - 1);
        }
        const auto& coop = p->coop();
        int left = self(self, coop.left);
        int right = self(self, coop.right);
        Node n;
        n.left = left;
        n.right = right;
        n.coop_set = coop.coop_set;
        std::sort(n.coop_set.begin(), n.coop_set.end());
        tree.nodes_.push_back(std::move(n));
        return static_cast<int>(tree.nodes_.size() - 1);
    };
    tree.root_ = static_cast<std::size_t>(build(build, spec.initial_process));
    return tree;
}

std::size_t ConfigurationHash::operator()(const Configuration& c) const {
    std::size_t h = 1469598103934665603ull;
    auto mix = [&h](std::size_t v) {
        h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    for (const auto& leaf : c.leaves) {
        mix(static_cast<std::size_t>(leaf.level));
        mix(leaf.schedule.size());
        for (const auto& e : leaf.schedule) {
            mix(static_cast<std::size_t>(e.level_at_start));
            mix(static_cast<std::size_t>(e.stoich));
            mix(std::hash<std::string>{}(e.action));
            mix(static_cast<std::size_t>(e.role));
        }
    }
    return h;
}

Configuration initial_configuration(const ProcessTree& tree) {
    Configuration cfg;
    cfg.leaves.resize(tree.leaf_count());
    for (std::size_t i = 0; i < tree.leaf_count(); ++i)
        cfg.leaves[i].level = tree.leaf(i).init_level;
    return cfg;
}

const ScheduleEntry* first_scheduled(const ActionId& action,
                                     const std::vector<ScheduleEntry>& list) {
    for (const auto& e : list)
        if (e.action == action) return &e;
    return nullptr;
}

std::vector<ScheduleEntry> drop_first_scheduled(const ActionId& action,
                                                std::vector<ScheduleEntry> list) {
    for (auto it = list.begin(); it != list.end(); ++it) {
        if (it->action == action) {
            list.erase(it);
            break;
        }
    }
    return list;
}

std::vector<ScheduleEntry> product_entries(const std::vector<ScheduleEntry>& list) {
    std::vector<ScheduleEntry> out;
    for (const auto& e : list)
        if (e.role == RoleOp::Product) out.push_back(e);
    return out;
}

std::int64_t scheduled_level_sum(const std::vector<ScheduleEntry>& list) {
    std::int64_t sum = 0;
    for (const auto& e : list) sum += e.stoich;
    return sum;
}

namespace {

// A derivation of one subtree: the context accumulated so far and the leaf
// states it rewrites.
struct PartialDeriv {
    RateContext ctx;
    std::vector<std::pair<std::size_t, LeafState>> changes;
};

using DerivMap = std::map<ActionId, std::vector<PartialDeriv>>;

PartialDeriv join(const PartialDeriv& a, const PartialDeriv& b) {
    PartialDeriv out;
    out.ctx = a.ctx;
    out.ctx.insert(out.ctx.end(), b.ctx.begin(), b.ctx.end());
    out.changes = a.changes;
    out.changes.insert(out.changes.end(), b.changes.begin(), b.changes.end());
    return out;
}

// Composition shared by the start and completion relations: actions in the
// cooperation set synchronize both sides, the rest interleave.
DerivMap combine(const ProcessTree::Node& node, DerivMap left, DerivMap right,
                 bool completion_mode) {
    DerivMap out;
    auto take_independent = [&](DerivMap& side) {
        for (auto& [action, derivs] : side) {
            if (node.in_coop_set(action)) continue;
            auto& bucket = out[action];
            for (auto& d : derivs) bucket.push_back(std::move(d));
        }
    };
    take_independent(left);
    take_independent(right);
    for (const auto& action : node.coop_set) {
        auto l = left.find(action);
        auto r = right.find(action);
        const bool lhas = l != left.end();
        const bool rhas = r != right.end();
        if (lhas && rhas) {
            auto& bucket = out[action];
            for (const auto& a : l->second)
                for (const auto& b : r->second) bucket.push_back(join(a, b));
        } else if (completion_mode && (lhas || rhas)) {
            // A running synchronized instance must be pending on both sides.
            throw std::logic_error("corrupt configuration: action " + action +
                                   " is pending in one synchronized component only");
        }
    }
    return out;
}

DerivMap start_derivs(const Configuration& cfg, const ProcessTree& tree, const SystemSpec& spec,
                      std::size_t node_idx, CapacityMode capacity) {
    const auto& node = tree.node(node_idx);
    if (node.is_leaf()) {
        const auto& info = tree.leaf(static_cast<std::size_t>(node.leaf));
        const auto& comp = spec.components[info.component_index];
        const LeafState& state = cfg.leaves[static_cast<std::size_t>(node.leaf)];
        const std::int64_t l = state.level;
        const std::int64_t n = info.max_level;

        DerivMap out;
        for (const auto& term : comp.terms) {
            bool enabled = false;
            std::int64_t new_level = l;
            switch (term.role) {
                case RoleOp::Reactant:
                    enabled = term.stoich <= l && l <= n;
                    new_level = l - term.stoich;
                    break;
                case RoleOp::Product: {
                    const std::int64_t pending = scheduled_level_sum(product_entries(state.schedule));
                    enabled = capacity == CapacityMode::Strict
                                  ? l >= 0 && l + pending + term.stoich <= n
                                  : l + pending >= 0 && l + pending <= n;
                    break;
                }
                case RoleOp::Modifier:
                case RoleOp::Inhibitor:
                    enabled = 1 <= l && l <= n;
                    break;
                case RoleOp::Activator:
                    enabled = term.stoich <= l && l <= n;
                    break;
            }
            if (!enabled) continue;
            PartialDeriv d;
            d.ctx.push_back({info.species, term.role, l, term.stoich});
            LeafState next = state;
            next.level = new_level;
            next.schedule.push_back({l, term.stoich, term.action, term.role});
            d.changes.emplace_back(static_cast<std::size_t>(node.leaf), std::move(next));
            out[term.action].push_back(std::move(d));
        }
        return out;
    }
    return combine(node, start_derivs(cfg, tree, spec, static_cast<std::size_t>(node.left), capacity),
                   start_derivs(cfg, tree, spec, static_cast<std::size_t>(node.right), capacity),
                   /*completion_mode=*/false);
}

DerivMap completion_derivs(const Configuration& cfg, const ProcessTree& tree,
                           const SystemSpec& spec, std::size_t node_idx) {
    const auto& node = tree.node(node_idx);
    if (node.is_leaf()) {
        const auto& info = tree.leaf(static_cast<std::size_t>(node.leaf));
        const LeafState& state = cfg.leaves[static_cast<std::size_t>(node.leaf)];

        DerivMap out;
        for (const auto& entry : state.schedule) {
            if (out.count(entry.action)) continue;  // only the oldest instance completes
            PartialDeriv d;
            d.ctx.push_back({info.species, entry.role, entry.level_at_start, entry.stoich});
            LeafState next = state;
            if (entry.role == RoleOp::Product) next.level = state.level + entry.stoich;
            next.schedule = drop_first_scheduled(entry.action, std::move(next.schedule));
            d.changes.emplace_back(static_cast<std::size_t>(node.leaf), std::move(next));
            out[entry.action].push_back(std::move(d));
        }
        return out;
    }
    return combine(node, completion_derivs(cfg, tree, spec, static_cast<std::size_t>(node.left)),
                   completion_derivs(cfg, tree, spec, static_cast<std::size_t>(node.right)),
                   /*completion_mode=*/true);
}

std::vector<Derivation> materialize(const Configuration& cfg, DerivMap map) {
    std::vector<Derivation> out;
    for (auto& [action, derivs] : map) {
        for (auto& d : derivs) {
            Derivation full;
            full.action = action;
            full.ctx = std::move(d.ctx);
            full.successor = cfg;
            for (auto& [leaf_idx, state] : d.changes)
                full.successor.leaves[leaf_idx] = std::move(state);
            out.push_back(std::move(full));
        }
    }
    return out;
}

}  // namespace

std::vector<Derivation> start_transitions(const Configuration& cfg, const ProcessTree& tree,
                                          const SystemSpec& spec, CapacityMode capacity) {
    return materialize(cfg, start_derivs(cfg, tree, spec, tree.root(), capacity));
}

std::vector<Derivation> completion_transitions(const Configuration& cfg, const ProcessTree& tree,
                                               const SystemSpec& spec) {
    return materialize(cfg, completion_derivs(cfg, tree, spec, tree.root()));
}

std::vector<Transition> stochastic_transitions(const Configuration& cfg, const ProcessTree& tree,
                                               const SystemSpec& spec, CapacityMode capacity) {
    std::vector<Transition> out;
    for (auto& d : start_transitions(cfg, tree, spec, capacity)) {
        const double rate = eval_rate(d.action, d.ctx, spec);
        if (rate == 0.0) continue;  // cannot win a race; not a transition
        Transition t;
        t.label = {d.action, Phase::Start, rate, spec.delay_of(d.action).value_or(0.0),
                   std::move(d.ctx)};
        t.successor = std::move(d.successor);
        out.push_back(std::move(t));
    }
    for (auto& d : completion_transitions(cfg, tree, spec)) {
        const double rate = eval_rate(d.action, d.ctx, spec);
        Transition t;
        t.label = {d.action, Phase::Complete, rate, spec.delay_of(d.action).value_or(0.0),
                   std::move(d.ctx)};
        t.successor = std::move(d.successor);
        out.push_back(std::move(t));
    }
    return out;
}

Configuration canonical_configuration(Configuration cfg, const ProcessTree&) {
    for (auto& leaf : cfg.leaves)
        for (auto& e : leaf.schedule)
            if (e.role == RoleOp::Product) e.level_at_start = leaf.level;
    return cfg;
}

namespace {

std::int64_t instances_of(const Configuration& cfg, const ProcessTree& tree, std::size_t node_idx,
                          const ActionId& action) {
    const auto& node = tree.node(node_idx);
    if (node.is_leaf()) {
        std::int64_t count = 0;
        for (const auto& e : cfg.leaves[static_cast<std::size_t>(node.leaf)].schedule)
            if (e.action == action) ++count;
        return count;
    }
    const std::int64_t l = instances_of(cfg, tree, static_cast<std::size_t>(node.left), action);
    const std::int64_t r = instances_of(cfg, tree, static_cast<std::size_t>(node.right), action);
    // Synchronized instances appear in every participating side; the sides
    // carry equal counts (or zero for non-participants).
    return node.in_coop_set(action) ? std::max(l, r) : l + r;
}

}  // namespace

std::int64_t pending_instances(const Configuration& cfg, const ProcessTree& tree) {
    std::vector<ActionId> actions;
    for (const auto& leaf : cfg.leaves)
        for (const auto& e : leaf.schedule)
            if (std::find(actions.begin(), actions.end(), e.action) == actions.end())
                actions.push_back(e.action);
    std::int64_t total = 0;
    for (const auto& a : actions) total += instances_of(cfg, tree, tree.root(), a);
    return total;
}

std::string state_label(const Configuration& cfg, const ProcessTree& tree) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < cfg.leaves.size(); ++i) {
        if (i) os << ",";
        os << cfg.leaves[i].level;
    }
    os << "):" << pending_instances(cfg, tree);
    return os.str();
}

Slts explore_slts(const SystemSpec& spec, const ProcessTree& tree, const ExploreLimits& limits,
                  CapacityMode capacity) {
    Slts slts;
    std::unordered_map<Configuration, std::size_t, ConfigurationHash> index;

    Configuration init = canonical_configuration(initial_configuration(tree), tree);
    slts.states.push_back(init);
    index.emplace(std::move(init), 0);

    std::deque<std::size_t> frontier{0};
    while (!frontier.empty() && !slts.truncated) {
        const std::size_t id = frontier.front();
        frontier.pop_front();
        // The state vector may reallocate while successors are appended;
        // expand from a copy.
        const Configuration current = slts.states[id];
        for (auto& t : stochastic_transitions(current, tree, spec, capacity)) {
            Configuration succ = canonical_configuration(std::move(t.successor), tree);
            bool over_pending = false;
            for (const auto& leaf : succ.leaves)
                over_pending |= leaf.schedule.size() > limits.max_pending_per_species;
            if (over_pending) {
                slts.truncated = true;
                slts.truncation_reason = "pending-instance limit exceeded while starting action " +
                                         t.label.action;
                break;
            }
            auto it = index.find(succ);
            std::size_t succ_id;
            if (it != index.end()) {
                succ_id = it->second;
            } else {
                if (slts.states.size() >= limits.max_states) {
                    slts.truncated = true;
                    slts.truncation_reason = "state limit reached";
                    break;
                }
                succ_id = slts.states.size();
                slts.states.push_back(succ);
                index.emplace(std::move(succ), succ_id);
                frontier.push_back(succ_id);
            }
            slts.edges.push_back(
                {id, succ_id, t.label.action, t.label.phase, t.label.rate, t.label.delay});
        }
    }

    std::sort(slts.edges.begin(), slts.edges.end(), [](const Slts::Edge& a, const Slts::Edge& b) {
        return std::tie(a.from, a.action, a.phase, a.to) < std::tie(b.from, b.action, b.phase, b.to);
    });
    return slts;
}

}  // namespace biopepad
