#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "biopepad/expr.hpp"

namespace biopepad {

using ActionId = std::string;
using SpeciesId = std::string;

/// Role a species plays in one action.
enum class RoleOp { Reactant, Product, Activator, Inhibitor, Modifier };

/// Concrete-syntax operator for a role: "<<", ">>", "(+)", "(-)", "(.)".
const char* role_symbol(RoleOp role);
const char* role_name(RoleOp role);

/// One summand of a species definition: (action, stoichiometry) role.
struct PrefixTerm {
    ActionId action;
    std::int64_t stoich = 1;  // >= 1
    RoleOp role = RoleOp::Reactant;

    bool operator==(const PrefixTerm&) const = default;
};

/// A species definition: a choice over prefix terms, each continuing as the
/// species itself.
struct SpeciesComponent {
    SpeciesId name;
    std::vector<PrefixTerm> terms;

    const PrefixTerm* term_for(const ActionId& action) const;
    bool operator==(const SpeciesComponent&) const = default;
};

/// Per-species quantity record. `declared`/`declared_init` distinguish an
/// explicit `species` statement from defaults synthesized at parse time;
/// they are provenance, not structure, and stay out of equality.
struct SpeciesQuantity {
    SpeciesId name;
    std::int64_t max_level = 0;
    std::int64_t init_level = 0;
    bool declared = false;
    bool declared_init = false;

    bool operator==(const SpeciesQuantity& o) const {
        return name == o.name && max_level == o.max_level && init_level == o.init_level;
    }
};

/// Default capacity used when a model omits the `species` statement; large
/// enough that it never constrains desk-scale models.
inline constexpr std::int64_t kDefaultMaxLevel = 1'000'000'000;

/// Functional rate of an action: either mass action with a named kinetic
/// constant, or a general arithmetic expression.
struct RateDef {
    struct MassAction {
        std::string param;
        bool operator==(const MassAction&) const = default;
    };
    ActionId action;
    std::variant<MassAction, ExprPtr> law;

    bool is_mass_action() const { return std::holds_alternative<MassAction>(law); }
    bool operator==(const RateDef& o) const;
};

struct DelayDef {
    ActionId action;
    double delay = 0.0;
    bool operator==(const DelayDef&) const = default;
};

struct HistoryDef {
    SpeciesId species;
    ExprPtr expr;  // over parameters and `t`
    bool operator==(const HistoryDef& o) const;
};

/// Compartments are accepted and carried through untouched; no analysis
/// consults them.
struct Compartment {
    std::string name;
    std::optional<double> size;
    bool operator==(const Compartment&) const = default;
};

/// Initial process tree: cooperation nodes over leaves carrying a species
/// name and its starting level. Immutable and shared after construction.
struct ProcessNode;
using ProcessPtr = std::shared_ptr<const ProcessNode>;

struct ProcessNode {
    struct Leaf {
        SpeciesId species;
        std::int64_t init_level = 0;
    };
    struct Coop {
        ProcessPtr left;
        ProcessPtr right;
        std::vector<ActionId> coop_set;  // sorted, unique
    };
    std::variant<Leaf, Coop> node;

    bool is_leaf() const { return std::holds_alternative<Leaf>(node); }
    const Leaf& leaf() const { return std::get<Leaf>(node); }
    const Coop& coop() const { return std::get<Coop>(node); }
};

ProcessPtr make_leaf(SpeciesId species, std::int64_t init_level);
ProcessPtr make_coop(ProcessPtr left, ProcessPtr right, std::vector<ActionId> coop_set);
bool process_equal(const ProcessPtr& a, const ProcessPtr& b);

/// A full model: compartments, quantities, parameters, functional rates,
/// species definitions, the initial process and the per-action delay map.
struct SystemSpec {
    std::vector<Compartment> compartments;
    double step_size = 1.0;  // concentration units per level, shared (h)
    std::vector<std::pair<std::string, double>> params;
    std::vector<RateDef> rates;
    std::vector<DelayDef> delays;
    std::vector<SpeciesQuantity> quantities;
    std::vector<SpeciesComponent> components;
    std::vector<HistoryDef> histories;
    ProcessPtr initial_process;

    const SpeciesComponent* find_component(const SpeciesId& name) const;
    const SpeciesQuantity* find_quantity(const SpeciesId& name) const;
    std::optional<double> param_value(const std::string& name) const;
    const RateDef* rate_of(const ActionId& action) const;
    std::optional<double> delay_of(const ActionId& action) const;
    const HistoryDef* history_of(const SpeciesId& species) const;
    bool is_species(const std::string& name) const { return find_component(name) != nullptr; }

    /// Species in component-definition order; fixes matrix rows and DDE
    /// variable order.
    std::vector<SpeciesId> species_order() const;
    /// Actions in order of first appearance across components; fixes matrix
    /// columns and the kinetic-law vector order.
    std::vector<ActionId> action_order() const;

    bool operator==(const SystemSpec& o) const;
};

/// One scheduled, still-running action instance as seen by one species:
/// the level the species had when the instance started, the stoichiometry
/// it committed, the action and the species' role in it.
struct ScheduleEntry {
    std::int64_t level_at_start = 0;
    std::int64_t stoich = 1;
    ActionId action;
    RoleOp role = RoleOp::Reactant;

    bool operator==(const ScheduleEntry&) const = default;
};

/// Quantitative context of a transition: one record per participating
/// species, in cooperation order. Completion contexts carry the levels
/// stored at start time so the original rate is recomputable.
struct RateContextEntry {
    SpeciesId species;
    RoleOp role = RoleOp::Reactant;
    std::int64_t level = 0;
    std::int64_t stoich = 1;

    bool operator==(const RateContextEntry&) const = default;
};
using RateContext = std::vector<RateContextEntry>;

/// A violated model invariant; validation reports all of them instead of
/// failing fast.
struct Violation {
    std::string where;
    std::string message;
};

std::vector<Violation> validate(const SystemSpec& spec);

/// Species-by-actions matrix of net level changes.
struct StoichMatrix {
    std::vector<SpeciesId> species;
    std::vector<ActionId> actions;
    std::vector<std::int64_t> entries;  // row-major, species x actions

    std::int64_t at(std::size_t species_idx, std::size_t action_idx) const {
        return entries[species_idx * actions.size() + action_idx];
    }
    std::optional<std::size_t> species_index(const SpeciesId& s) const;
    std::optional<std::size_t> action_index(const ActionId& a) const;
};

/// Builds the stoichiometry matrix: +kappa for products, -kappa for
/// reactants, 0 otherwise. Delays never enter. Throws std::invalid_argument
/// if a species is both reactant and product of one action.
StoichMatrix stoichiometry_matrix(const SystemSpec& spec);

class RateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluates the functional rate of `action` against the given context and
/// divides by the step size. Species variables bind to level * h. Returns a
/// nonnegative value; zero means the action cannot fire in this context.
/// Throws RateError on missing bindings and negative or non-finite results.
double eval_rate(const ActionId& action, const RateContext& ctx, const SystemSpec& spec);

}  // namespace biopepad
