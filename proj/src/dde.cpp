#include "biopepad/dde.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace biopepad {

double HistorySpec::at(double t, const std::vector<std::pair<std::string, double>>& params) const {
    if (is_constant) return constant;
    auto lookup = [&](const std::string& name, double) -> std::optional<double> {
        if (name == "t") return t;
        for (const auto& [n, v] : params)
            if (n == name) return v;
        return std::nullopt;
    };
    return eval_expr(*expr, lookup);
}

namespace {

// Mass-action law as an explicit expression: k * prod reactant/activator
// concentrations^kappa, every species reference delayed by the action's
// delay.
ExprPtr mass_action_law(const SystemSpec& spec, const ActionId& action, const std::string& param,
                        double delay) {
    ExprPtr law = make_var(param);
    for (const auto& species : spec.species_order()) {
        const PrefixTerm* term = spec.find_component(species)->term_for(action);
        if (!term) continue;
        if (term->role != RoleOp::Reactant && term->role != RoleOp::Activator) continue;
        for (std::int64_t i = 0; i < term->stoich; ++i)
            law = make_binary(BinOp::Mul, law, make_var(species, delay));
    }
    return law;
}

}  // namespace

DdeSystem derive_dde(const SystemSpec& spec) {
    DdeSystem sys;
    sys.stoich = stoichiometry_matrix(spec);
    sys.variables = sys.stoich.species;
    sys.params = spec.params;
    if (sys.stoich.actions.empty()) throw std::invalid_argument("model defines no actions");

    for (const auto& action : sys.stoich.actions) {
        const double delay = spec.delay_of(action).value_or(0.0);
        sys.delays.push_back(delay);
        sys.max_delay = std::max(sys.max_delay, delay);

        const RateDef* def = spec.rate_of(action);
        if (!def) throw std::invalid_argument("no functional rate for action " + action);
        if (const auto* ma = std::get_if<RateDef::MassAction>(&def->law)) {
            sys.kinetic_laws.push_back(mass_action_law(spec, action, ma->param, delay));
        } else {
            sys.kinetic_laws.push_back(delay_species_refs(
                std::get<ExprPtr>(def->law),
                [&](const std::string& name) { return spec.is_species(name); }, delay));
        }
    }

    std::map<SpeciesId, std::int64_t> leaf_levels;
    auto walk = [&](auto&& self, const ProcessPtr& p) -> void {
        if (!p) return;
        if (p->is_leaf()) {
            leaf_levels.emplace(p->leaf().species, p->leaf().init_level);
            return;
        }
        self(self, p->coop().left);
        self(self, p->coop().right);
    };
    walk(walk, spec.initial_process);

    for (const auto& species : sys.variables) {
        HistorySpec h;
        if (const auto* override_def = spec.history_of(species)) {
            h.expr = override_def->expr;
            h.is_constant = false;
        } else {
            std::int64_t level = 0;
            if (auto it = leaf_levels.find(species); it != leaf_levels.end())
                level = it->second;
            else if (const auto* q = spec.find_quantity(species))
                level = q->init_level;
            h.constant = spec.step_size * static_cast<double>(level);
            h.expr = make_number(h.constant);
        }
        sys.history.push_back(std::move(h));
    }
    return sys;
}

std::vector<EquationTerm> equation_terms(const DdeSystem& sys, std::size_t variable_index) {
    std::vector<EquationTerm> terms;
    for (std::size_t a = 0; a < sys.kinetic_laws.size(); ++a) {
        const std::int64_t d = sys.stoich.at(variable_index, a);
        if (d == 0) continue;
        terms.push_back({static_cast<double>(d), sys.kinetic_laws[a]});
    }
    return terms;
}

std::optional<Monomial> monomial_of(const Expr& expr) {
    if (const auto* n = std::get_if<Expr::Number>(&expr.node)) {
        Monomial m;
        m.coefficient = n->value;
        return m;
    }
    if (const auto* v = std::get_if<Expr::Var>(&expr.node)) {
        Monomial m;
        m.factors.emplace_back(v->name, v->delay, 1);
        return m;
    }
    if (const auto* u = std::get_if<Expr::Neg>(&expr.node)) {
        auto inner = monomial_of(*u->operand);
        if (!inner) return std::nullopt;
        inner->coefficient = -inner->coefficient;
        return inner;
    }
    const auto& b = std::get<Expr::Binary>(expr.node);
    if (b.op == BinOp::Mul) {
        auto lhs = monomial_of(*b.lhs);
        auto rhs = monomial_of(*b.rhs);
        if (!lhs || !rhs) return std::nullopt;
        Monomial m;
        m.coefficient = lhs->coefficient * rhs->coefficient;
        m.factors = lhs->factors;
        for (const auto& f : rhs->factors) {
            auto it = std::find_if(m.factors.begin(), m.factors.end(), [&](const auto& g) {
                return std::get<0>(g) == std::get<0>(f) && std::get<1>(g) == std::get<1>(f);
            });
            if (it != m.factors.end())
                std::get<2>(*it) += std::get<2>(f);
            else
                m.factors.push_back(f);
        }
        std::sort(m.factors.begin(), m.factors.end());
        return m;
    }
    if (b.op == BinOp::Pow) {
        auto base = monomial_of(*b.lhs);
        const auto* exp = std::get_if<Expr::Number>(&b.rhs->node);
        if (!base || !exp || base->coefficient != 1.0 || base->factors.size() != 1) return std::nullopt;
        if (exp->value != std::floor(exp->value)) return std::nullopt;
        Monomial m = *base;
        std::get<2>(m.factors[0]) = static_cast<int>(exp->value);
        return m;
    }
    return std::nullopt;
}

namespace {

// Largest step <= requested that divides every positive delay to within
// 1e-9; shrinking one delay's step can break another's divisibility, so
// sweep until stable.
double align_step(double requested, const std::vector<double>& delays) {
    double dt = requested;
    for (int pass = 0; pass < 64; ++pass) {
        bool changed = false;
        for (double d : delays) {
            if (d <= 0.0) continue;
            const double k = std::ceil(d / dt - 1e-9);
            const double candidate = d / k;
            if (candidate < dt - 1e-15) {
                dt = candidate;
                changed = true;
            }
        }
        if (!changed) break;
    }
    for (double d : delays) {
        if (d <= 0.0) continue;
        const double k = std::round(d / dt);
        if (std::abs(k * dt - d) > 1e-9)
            throw std::invalid_argument("cannot align integration step to delay " +
                                        format_double(d));
    }
    return dt;
}

}  // namespace

SolutionGrid solve_dde(const DdeSystem& sys, double t_end, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("integration step must be positive");
    if (!(t_end > sys.t0)) throw std::invalid_argument("horizon must lie after t0");

    SolutionGrid grid;
    grid.requested_dt = step;
    const double dt = align_step(step, sys.delays);
    grid.dt = dt;
    grid.t0 = sys.t0;

    const std::size_t n = sys.variables.size();
    const std::size_t history_rows =
        static_cast<std::size_t>(std::round(sys.max_delay / dt));
    const std::size_t steps =
        static_cast<std::size_t>(std::ceil((t_end - sys.t0) / dt - 1e-9));
    const std::size_t total_rows = history_rows + steps + 1;
    grid.first_solution_row = history_rows;

    grid.times.resize(total_rows);
    grid.values.assign(total_rows * n, 0.0);
    std::vector<double> derivs(total_rows * n, 0.0);

    auto time_at = [&](std::size_t row) {
        return sys.t0 + (static_cast<double>(row) - static_cast<double>(history_rows)) * dt;
    };
    for (std::size_t row = 0; row < total_rows; ++row) grid.times[row] = time_at(row);

    // Pre-fill the history segment and the initial value at t0.
    for (std::size_t row = 0; row <= history_rows; ++row)
        for (std::size_t s = 0; s < n; ++s)
            grid.values[row * n + s] = sys.history[s].at(grid.times[row], sys.params);

    // Delayed lookup: history expressions are evaluated directly (exact);
    // later times interpolate the stored grid with cubic Hermite.
    auto delayed_value = [&](std::size_t s, double t) -> double {
        if (t <= sys.t0 + 1e-12 * std::max(1.0, std::abs(sys.t0)))
            return sys.history[s].at(t, sys.params);
        const double pos = (t - grid.times[0]) / dt;
        const double nearest = std::round(pos);
        if (std::abs(pos - nearest) < 1e-7) {
            const std::size_t row = static_cast<std::size_t>(nearest);
            return grid.values[row * n + s];
        }
        const std::size_t row = static_cast<std::size_t>(std::floor(pos));
        const double u = pos - static_cast<double>(row);
        const double y0 = grid.values[row * n + s];
        const double y1 = grid.values[(row + 1) * n + s];
        const double f0 = derivs[row * n + s];
        const double f1 = derivs[(row + 1) * n + s];
        const double u2 = u * u, u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * dt * f0 +
               (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * dt * f1;
    };

    std::vector<double> y(n), k1(n), k2(n), k3(n), k4(n), stage(n), rates(sys.kinetic_laws.size());
    for (std::size_t s = 0; s < n; ++s) y[s] = grid.values[history_rows * n + s];

    auto rhs = [&](double t, const std::vector<double>& state, std::vector<double>& out) {
        auto lookup = [&](const std::string& name, double delay) -> std::optional<double> {
            for (std::size_t s = 0; s < n; ++s) {
                if (sys.variables[s] != name) continue;
                // Zero-delay references see the current stage state, so the
                // delay-free system integrates exactly like an ODE.
                return delay == 0.0 ? state[s] : delayed_value(s, t - delay);
            }
            for (const auto& [pname, v] : sys.params)
                if (pname == name) return v;
            return std::nullopt;
        };
        for (std::size_t a = 0; a < sys.kinetic_laws.size(); ++a)
            rates[a] = eval_expr(*sys.kinetic_laws[a], lookup);
        for (std::size_t s = 0; s < n; ++s) {
            double acc = 0.0;
            for (std::size_t a = 0; a < sys.kinetic_laws.size(); ++a) {
                const std::int64_t d = sys.stoich.at(s, a);
                if (d != 0) acc += static_cast<double>(d) * rates[a];
            }
            out[s] = acc;
        }
    };

    for (std::size_t i = 0; i < steps; ++i) {
        const std::size_t row = history_rows + i;
        const double t = grid.times[row];

        rhs(t, y, k1);
        for (std::size_t s = 0; s < n; ++s) derivs[row * n + s] = k1[s];

        for (std::size_t s = 0; s < n; ++s) stage[s] = y[s] + 0.5 * dt * k1[s];
        rhs(t + 0.5 * dt, stage, k2);
        for (std::size_t s = 0; s < n; ++s) stage[s] = y[s] + 0.5 * dt * k2[s];
        rhs(t + 0.5 * dt, stage, k3);
        for (std::size_t s = 0; s < n; ++s) stage[s] = y[s] + dt * k3[s];
        rhs(t + dt, stage, k4);

        for (std::size_t s = 0; s < n; ++s) {
            y[s] += dt / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
            if (!std::isfinite(y[s]))
                throw DdeError("solution for " + sys.variables[s] + " is no longer finite",
                               t + dt);
            grid.values[(row + 1) * n + s] = y[s];
        }
    }

    // Derivative at the final row, for completeness of the stored grid.
    if (steps > 0) {
        rhs(grid.times[total_rows - 1], y, k1);
        for (std::size_t s = 0; s < n; ++s) derivs[(total_rows - 1) * n + s] = k1[s];
    }
    return grid;
}

std::string dde_text(const DdeSystem& sys) {
    std::ostringstream os;
    for (std::size_t s = 0; s < sys.variables.size(); ++s) {
        os << "d" << sys.variables[s] << "/dt = ";
        const auto terms = equation_terms(sys, s);
        if (terms.empty()) {
            os << "0\n";
            continue;
        }
        bool first = true;
        for (const auto& term : terms) {
            const double c = term.coefficient;
            if (first) {
                if (c < 0) os << "-";
            } else {
                os << (c < 0 ? " - " : " + ");
            }
            const double mag = std::abs(c);
            if (mag != 1.0) os << format_double(mag) << "*";
            const bool wrap = !monomial_of(*term.law).has_value();
            if (wrap) os << "(";
            os << render_expr(*term.law);
            if (wrap) os << ")";
            first = false;
        }
        os << "\n";
    }
    return os.str();
}

namespace {

nlohmann::json expr_to_json(const Expr& e) {
    if (const auto* num = std::get_if<Expr::Number>(&e.node))
        return {{"kind", "number"}, {"value", num->value}};
    if (const auto* v = std::get_if<Expr::Var>(&e.node)) {
        nlohmann::json j{{"kind", "var"}, {"name", v->name}};
        if (v->delay != 0.0) j["delay"] = v->delay;
        return j;
    }
    if (const auto* u = std::get_if<Expr::Neg>(&e.node))
        return {{"kind", "neg"}, {"operand", expr_to_json(*u->operand)}};
    const auto& b = std::get<Expr::Binary>(e.node);
    static const char* names[] = {"add", "sub", "mul", "div", "pow"};
    return {{"kind", names[static_cast<int>(b.op)]},
            {"lhs", expr_to_json(*b.lhs)},
            {"rhs", expr_to_json(*b.rhs)}};
}

ExprPtr expr_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind");
    if (kind == "number") return make_number(j.at("value").get<double>());
    if (kind == "var")
        return make_var(j.at("name").get<std::string>(), j.value("delay", 0.0));
    if (kind == "neg") return make_neg(expr_from_json(j.at("operand")));
    static const std::map<std::string, BinOp> ops{{"add", BinOp::Add},
                                                  {"sub", BinOp::Sub},
                                                  {"mul", BinOp::Mul},
                                                  {"div", BinOp::Div},
                                                  {"pow", BinOp::Pow}};
    return make_binary(ops.at(kind), expr_from_json(j.at("lhs")), expr_from_json(j.at("rhs")));
}

}  // namespace

nlohmann::json dde_to_json(const DdeSystem& sys) {
    nlohmann::json j;
    j["variables"] = sys.variables;
    j["actions"] = sys.stoich.actions;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t s = 0; s < sys.variables.size(); ++s) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t a = 0; a < sys.stoich.actions.size(); ++a) row.push_back(sys.stoich.at(s, a));
        rows.push_back(std::move(row));
    }
    j["stoichiometry"] = std::move(rows);
    nlohmann::json laws = nlohmann::json::array();
    for (const auto& law : sys.kinetic_laws) laws.push_back(expr_to_json(*law));
    j["kinetic_laws"] = std::move(laws);
    j["delays"] = sys.delays;
    j["max_delay"] = sys.max_delay;
    j["t0"] = sys.t0;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : sys.history) {
        nlohmann::json hj;
        hj["constant"] = h.is_constant;
        if (h.is_constant)
            hj["value"] = h.constant;
        else
            hj["expr"] = expr_to_json(*h.expr);
        hist.push_back(std::move(hj));
    }
    j["history"] = std::move(hist);
    nlohmann::json params = nlohmann::json::array();
    for (const auto& [name, value] : sys.params)
        params.push_back({{"name", name}, {"value", value}});
    j["params"] = std::move(params);
    return j;
}

DdeSystem dde_from_json(const nlohmann::json& j) {
    DdeSystem sys;
    sys.variables = j.at("variables").get<std::vector<std::string>>();
    sys.stoich.species = sys.variables;
    sys.stoich.actions = j.at("actions").get<std::vector<std::string>>();
    for (const auto& row : j.at("stoichiometry"))
        for (const auto& entry : row) sys.stoich.entries.push_back(entry.get<std::int64_t>());
    for (const auto& law : j.at("kinetic_laws")) sys.kinetic_laws.push_back(expr_from_json(law));
    sys.delays = j.at("delays").get<std::vector<double>>();
    sys.max_delay = j.at("max_delay").get<double>();
    sys.t0 = j.at("t0").get<double>();
    for (const auto& hj : j.at("history")) {
        HistorySpec h;
        h.is_constant = hj.at("constant").get<bool>();
        if (h.is_constant) {
            h.constant = hj.at("value").get<double>();
            h.expr = make_number(h.constant);
        } else {
            h.expr = expr_from_json(hj.at("expr"));
        }
        sys.history.push_back(std::move(h));
    }
    for (const auto& pj : j.at("params"))
        sys.params.emplace_back(pj.at("name").get<std::string>(), pj.at("value").get<double>());
    return sys;
}

bool dde_equal(const DdeSystem& a, const DdeSystem& b) {
    if (a.variables != b.variables || a.stoich.actions != b.stoich.actions ||
        a.stoich.entries != b.stoich.entries || a.delays != b.delays ||
        a.max_delay != b.max_delay || a.t0 != b.t0 || a.params != b.params)
        return false;
    if (a.kinetic_laws.size() != b.kinetic_laws.size() || a.history.size() != b.history.size())
        return false;
    for (std::size_t i = 0; i < a.kinetic_laws.size(); ++i)
        if (!expr_equal(*a.kinetic_laws[i], *b.kinetic_laws[i])) return false;
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        if (a.history[i].is_constant != b.history[i].is_constant) return false;
        if (a.history[i].is_constant) {
            if (a.history[i].constant != b.history[i].constant) return false;
        } else if (!expr_equal(*a.history[i].expr, *b.history[i].expr)) {
            return false;
        }
    }
    return true;
}

std::string solution_csv(const SolutionGrid& grid, const DdeSystem& sys) {
    std::ostringstream os;
    os << "time";
    for (const auto& v : sys.variables) os << "," << v;
    os << ",segment\n";
    const std::size_t n = sys.variables.size();
    for (std::size_t row = 0; row < grid.times.size(); ++row) {
        os << format_double(grid.times[row]);
        for (std::size_t s = 0; s < n; ++s) os << "," << format_double(grid.values[row * n + s]);
        os << "," << (grid.segment_is_history(row) ? "history" : "solution") << "\n";
    }
    return os.str();
}

}  // namespace biopepad
