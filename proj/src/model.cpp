#include "biopepad/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace biopepad {

const char* role_symbol(RoleOp role) {
    switch (role) {
        case RoleOp::Reactant: return "<<";
        case RoleOp::Product: return ">>";
        case RoleOp::Activator: return "(+)";
        case RoleOp::Inhibitor: return "(-)";
        case RoleOp::Modifier: return "(.)";
    }
    return "?";
}

const char* role_name(RoleOp role) {
    switch (role) {
        case RoleOp::Reactant: return "reactant";
        case RoleOp::Product: return "product";
        case RoleOp::Activator: return "activator";
        case RoleOp::Inhibitor: return "inhibitor";
        case RoleOp::Modifier: return "modifier";
    }
    return "?";
}

const PrefixTerm* SpeciesComponent::term_for(const ActionId& action) const {
    for (const auto& t : terms)
        if (t.action == action) return &t;
    return nullptr;
}

bool RateDef::operator==(const RateDef& o) const {
    if (action != o.action || law.index() != o.law.index()) return false;
    if (const auto* ma = std::get_if<MassAction>(&law))
        return *ma == std::get<MassAction>(o.law);
    return expr_equal(*std::get<ExprPtr>(law), *std::get<ExprPtr>(o.law));
}

bool HistoryDef::operator==(const HistoryDef& o) const {
    return species == o.species && expr_equal(*expr, *o.expr);
}

ProcessPtr make_leaf(SpeciesId species, std::int64_t init_level) {
    return std::make_shared<ProcessNode>(
        ProcessNode{ProcessNode::Leaf{std::move(species), init_level}});
}

ProcessPtr make_coop(ProcessPtr left, ProcessPtr right, std::vector<ActionId> coop_set) {
    std::sort(coop_set.begin(), coop_set.end());
    coop_set.erase(std::unique(coop_set.begin(), coop_set.end()), coop_set.end());
    return std::make_shared<ProcessNode>(
        ProcessNode{ProcessNode::Coop{std::move(left), std::move(right), std::move(coop_set)}});
}

bool process_equal(const ProcessPtr& a, const ProcessPtr& b) {
    if (!a || !b) return a == b;
    if (a->is_leaf() != b->is_leaf()) return false;
    if (a->is_leaf())
        return a->leaf().species == b->leaf().species && a->leaf().init_level == b->leaf().init_level;
    const auto& x = a->coop();
    const auto& y = b->coop();
    return x.coop_set == y.coop_set && process_equal(x.left, y.left) && process_equal(x.right, y.right);
}

const SpeciesComponent* SystemSpec::find_component(const SpeciesId& name) const {
    for (const auto& c : components)
        if (c.name == name) return &c;
    return nullptr;
}

const SpeciesQuantity* SystemSpec::find_quantity(const SpeciesId& name) const {
    for (const auto& q : quantities)
        if (q.name == name) return &q;
    return nullptr;
}

std::optional<double> SystemSpec::param_value(const std::string& name) const {
    for (const auto& [n, v] : params)
        if (n == name) return v;
    return std::nullopt;
}

const RateDef* SystemSpec::rate_of(const ActionId& action) const {
    for (const auto& r : rates)
        if (r.action == action) return &r;
    return nullptr;
}

std::optional<double> SystemSpec::delay_of(const ActionId& action) const {
    for (const auto& d : delays)
        if (d.action == action) return d.delay;
    return std::nullopt;
}

const HistoryDef* SystemSpec::history_of(const SpeciesId& species) const {
    for (const auto& h : histories)
        if (h.species == species) return &h;
    return nullptr;
}

std::vector<SpeciesId> SystemSpec::species_order() const {
    std::vector<SpeciesId> out;
    out.reserve(components.size());
    for (const auto& c : components) out.push_back(c.name);
    return out;
}

std::vector<ActionId> SystemSpec::action_order() const {
    std::vector<ActionId> out;
    for (const auto& c : components)
        for (const auto& t : c.terms)
            if (std::find(out.begin(), out.end(), t.action) == out.end()) out.push_back(t.action);
    return out;
}

bool SystemSpec::operator==(const SystemSpec& o) const {
    return compartments == o.compartments && step_size == o.step_size && params == o.params &&
           rates == o.rates && delays == o.delays && quantities == o.quantities &&
           components == o.components && histories == o.histories &&
           process_equal(initial_process, o.initial_process);
}

namespace {

void collect_leaves(const ProcessPtr& p, std::vector<const ProcessNode::Leaf*>& out) {
    if (!p) return;
    if (p->is_leaf()) {
        out.push_back(&p->leaf());
        return;
    }
    collect_leaves(p->coop().left, out);
    collect_leaves(p->coop().right, out);
}

void collect_coop_actions(const ProcessPtr& p, std::set<ActionId>& out) {
    if (!p || p->is_leaf()) return;
    for (const auto& a : p->coop().coop_set) out.insert(a);
    collect_coop_actions(p->coop().left, out);
    collect_coop_actions(p->coop().right, out);
}

void check_rate_names(const SystemSpec& spec, const ActionId& action, const Expr& expr,
                      std::vector<Violation>& out) {
    std::vector<std::string> names;
    collect_vars(expr, names);
    for (const auto& n : names) {
        if (spec.param_value(n) || spec.is_species(n)) continue;
        out.push_back({"rate " + action,
                       "name '" + n + "' resolves to neither a parameter nor a species"});
    }
}

}  // namespace

std::vector<Violation> validate(const SystemSpec& spec) {
    std::vector<Violation> out;

    if (!(spec.step_size > 0.0))
        out.push_back({"step", "step size must be positive"});

    // Component definitions.
    std::unordered_set<std::string> component_names;
    for (const auto& c : spec.components) {
        if (!component_names.insert(c.name).second)
            out.push_back({"component " + c.name, "duplicate species definition"});
        if (c.terms.empty())
            out.push_back({"component " + c.name, "species definition has no prefix terms"});
        std::set<std::pair<ActionId, RoleOp>> seen;
        std::unordered_map<std::string, RoleOp> role_of_action;
        for (const auto& t : c.terms) {
            if (t.stoich < 1)
                out.push_back({"component " + c.name,
                               "stoichiometry of action " + t.action + " must be at least 1"});
            if (!seen.insert({t.action, t.role}).second)
                out.push_back({"component " + c.name,
                               "duplicate term for action " + t.action + " with role " +
                                   role_name(t.role)});
            auto [it, inserted] = role_of_action.try_emplace(t.action, t.role);
            if (!inserted && it->second != t.role)
                out.push_back({"component " + c.name,
                               "species participates in action " + t.action +
                                   " under two different roles"});
        }
    }

    // Parameter/species namespaces must not overlap or expressions become
    // ambiguous.
    std::unordered_set<std::string> param_names;
    for (const auto& [n, v] : spec.params) {
        (void)v;
        if (!param_names.insert(n).second)
            out.push_back({"param " + n, "duplicate parameter definition"});
        if (component_names.count(n))
            out.push_back({"param " + n, "name collides with a species definition"});
    }

    // Quantities.
    for (const auto& q : spec.quantities) {
        if (!spec.find_component(q.name))
            out.push_back({"species " + q.name, "quantity declared for undefined species"});
        if (q.max_level < 1)
            out.push_back({"species " + q.name, "maximum level must be at least 1"});
        if (q.init_level < 0 || q.init_level > q.max_level)
            out.push_back({"species " + q.name,
                           "initial level " + std::to_string(q.init_level) +
                               " outside [0, " + std::to_string(q.max_level) + "]"});
    }
    for (const auto& c : spec.components)
        if (!spec.find_quantity(c.name))
            out.push_back({"species " + c.name, "no quantity record for species"});

    // The delay map must be total over the actions appearing in components.
    for (const auto& action : spec.action_order()) {
        if (!spec.delay_of(action))
            out.push_back({"delay " + action, "no delay defined for action " + action});
        else if (*spec.delay_of(action) < 0.0)
            out.push_back({"delay " + action, "delay must be nonnegative"});
        if (!spec.rate_of(action))
            out.push_back({"rate " + action, "no functional rate defined for action " + action});
    }
    {
        auto actions = spec.action_order();
        auto is_action = [&](const ActionId& a) {
            return std::find(actions.begin(), actions.end(), a) != actions.end();
        };
        for (const auto& d : spec.delays)
            if (!is_action(d.action))
                out.push_back({"delay " + d.action, "delay defined for unknown action " + d.action});
        for (const auto& r : spec.rates)
            if (!is_action(r.action))
                out.push_back({"rate " + r.action, "rate defined for unknown action " + r.action});
    }

    // Rate definitions resolve, and expression rates only mention species
    // that actually take part in the action (others never have a binding in
    // the transition context).
    for (const auto& r : spec.rates) {
        if (const auto* ma = std::get_if<RateDef::MassAction>(&r.law)) {
            if (!spec.param_value(ma->param))
                out.push_back({"rate " + r.action,
                               "mass-action constant '" + ma->param + "' is not a parameter"});
        } else {
            check_rate_names(spec, r.action, *std::get<ExprPtr>(r.law), out);
            std::vector<std::string> names;
            collect_vars(*std::get<ExprPtr>(r.law), names);
            for (const auto& n : names) {
                const auto* comp = spec.find_component(n);
                if (comp && !comp->term_for(r.action))
                    out.push_back({"rate " + r.action,
                                   "references species " + n +
                                       " which does not participate in the action"});
            }
        }
    }

    // History overrides: species exists, free names are parameters or `t`.
    for (const auto& h : spec.histories) {
        if (!spec.find_component(h.species))
            out.push_back({"history " + h.species, "history declared for undefined species"});
        std::vector<std::string> names;
        collect_vars(*h.expr, names);
        for (const auto& n : names)
            if (n != "t" && !spec.param_value(n))
                out.push_back({"history " + h.species,
                               "name '" + n + "' is neither a parameter nor 't'"});
    }

    // Initial process.
    if (!spec.initial_process) {
        out.push_back({"system", "missing system definition"});
        return out;
    }
    std::vector<const ProcessNode::Leaf*> leaves;
    collect_leaves(spec.initial_process, leaves);
    std::unordered_set<std::string> leaf_names;
    for (const auto* leaf : leaves) {
        if (!spec.find_component(leaf->species)) {
            out.push_back({"system", "process uses undefined species " + leaf->species});
            continue;
        }
        if (!leaf_names.insert(leaf->species).second)
            out.push_back({"system", "species " + leaf->species + " appears in more than one leaf"});
        const auto* q = spec.find_quantity(leaf->species);
        if (q) {
            if (leaf->init_level < 0 || leaf->init_level > q->max_level)
                out.push_back({"system", "initial level of " + leaf->species + " outside [0, " +
                                             std::to_string(q->max_level) + "]"});
            if (q->declared_init && q->init_level != leaf->init_level)
                out.push_back({"system", "initial level of " + leaf->species +
                                             " disagrees with its species statement"});
        }
    }
    // Every defined species must occur in the process, or the transition
    // system and the reaction-level simulator would disagree about it.
    for (const auto& c : spec.components)
        if (!leaf_names.count(c.name))
            out.push_back({"system", "species " + c.name + " does not appear in the process"});
    std::set<ActionId> coop_actions;
    collect_coop_actions(spec.initial_process, coop_actions);
    {
        auto actions = spec.action_order();
        for (const auto& a : coop_actions)
            if (std::find(actions.begin(), actions.end(), a) == actions.end())
                out.push_back({"system", "cooperation set names unknown action " + a});
    }

    return out;
}

std::optional<std::size_t> StoichMatrix::species_index(const SpeciesId& s) const {
    for (std::size_t i = 0; i < species.size(); ++i)
        if (species[i] == s) return i;
    return std::nullopt;
}

std::optional<std::size_t> StoichMatrix::action_index(const ActionId& a) const {
    for (std::size_t i = 0; i < actions.size(); ++i)
        if (actions[i] == a) return i;
    return std::nullopt;
}

StoichMatrix stoichiometry_matrix(const SystemSpec& spec) {
    StoichMatrix m;
    m.species = spec.species_order();
    m.actions = spec.action_order();
    m.entries.assign(m.species.size() * m.actions.size(), 0);
    for (std::size_t s = 0; s < m.species.size(); ++s) {
        const auto& comp = *spec.find_component(m.species[s]);
        for (std::size_t a = 0; a < m.actions.size(); ++a) {
            bool consumes = false, produces = false;
            std::int64_t net = 0;
            for (const auto& t : comp.terms) {
                if (t.action != m.actions[a]) continue;
                switch (t.role) {
                    case RoleOp::Reactant:
                        consumes = true;
                        net -= t.stoich;
                        break;
                    case RoleOp::Product:
                        produces = true;
                        net += t.stoich;
                        break;
                    default:
                        break;  // activators, inhibitors, modifiers: no net change
                }
            }
            if (consumes && produces)
                throw std::invalid_argument("species " + m.species[s] +
                                            " is both reactant and product of action " +
                                            m.actions[a]);
            m.entries[s * m.actions.size() + a] = net;
        }
    }
    return m;
}

double eval_rate(const ActionId& action, const RateContext& ctx, const SystemSpec& spec) {
    const RateDef* def = spec.rate_of(action);
    if (!def) throw RateError("no functional rate defined for action " + action);
    const double h = spec.step_size;

    double value = 0.0;
    if (const auto* ma = std::get_if<RateDef::MassAction>(&def->law)) {
        auto k = spec.param_value(ma->param);
        if (!k) throw RateError("mass-action constant '" + ma->param + "' undefined for action " + action);
        value = *k;
        for (const auto& e : ctx) {
            if (e.role != RoleOp::Reactant && e.role != RoleOp::Activator) continue;
            double conc = static_cast<double>(e.level) * h;
            for (std::int64_t i = 0; i < e.stoich; ++i) value *= conc;
        }
    } else {
        const auto& expr = *std::get<ExprPtr>(def->law);
        auto lookup = [&](const std::string& name, double) -> std::optional<double> {
            for (const auto& e : ctx)
                if (e.species == name) return static_cast<double>(e.level) * h;
            if (auto p = spec.param_value(name)) return p;
            if (spec.is_species(name))
                throw RateError("rate of action " + action + " references species " + name +
                                " missing from the transition context");
            return std::nullopt;
        };
        try {
            value = eval_expr(expr, lookup);
        } catch (const ExprError& e) {
            throw RateError("rate of action " + action + ": " + e.what());
        }
    }

    value /= h;
    if (!std::isfinite(value))
        throw RateError("rate of action " + action + " is not finite");
    if (value < 0.0)
        throw RateError("rate of action " + action + " is negative");
    return value;
}

}  // namespace biopepad
