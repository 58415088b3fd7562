#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "biopepad/model.hpp"

namespace biopepad {

/// Pre-interval condition for one variable: an expression over parameters
/// and `t`, evaluated on [t0 - maxDelay, t0].
struct HistorySpec {
    ExprPtr expr;
    bool is_constant = true;
    double constant = 0.0;

    double at(double t, const std::vector<std::pair<std::string, double>>& params) const;
};

/// dx/dt = D * kinetic_laws, with species references inside each action's
/// law shifted by that action's delay.
struct DdeSystem {
    std::vector<SpeciesId> variables;
    StoichMatrix stoich;
    std::vector<ExprPtr> kinetic_laws;  // one per action, delayed references
    std::vector<double> delays;         // per action
    double max_delay = 0.0;
    std::vector<HistorySpec> history;  // one per variable
    std::vector<std::pair<std::string, double>> params;
    double t0 = 0.0;
};

/// Derives the DDE system of a validated spec. The default history is the
/// constant h * initial level; `history` statements override it.
DdeSystem derive_dde(const SystemSpec& spec);

/// One derivative equation as a sum of (integer stoichiometry) * (law).
struct EquationTerm {
    double coefficient = 0.0;
    ExprPtr law;
};
std::vector<EquationTerm> equation_terms(const DdeSystem& sys, std::size_t variable_index);

/// Normal form of a product-of-factors expression; nullopt when the
/// expression is not a plain monomial. Used for order-insensitive symbolic
/// comparison of equations.
struct Monomial {
    double coefficient = 1.0;
    // (name, delay, exponent), sorted.
    std::vector<std::tuple<std::string, double, int>> factors;

    bool operator==(const Monomial&) const = default;
};
std::optional<Monomial> monomial_of(const Expr& expr);

class DdeError : public std::runtime_error {
public:
    DdeError(std::string message, double time)
        : std::runtime_error(std::move(message)), time_of_failure(time) {}
    double time_of_failure;
};

struct SolutionGrid {
    double dt = 0.0;           // actual step after delay alignment
    double requested_dt = 0.0;
    double t0 = 0.0;
    std::vector<double> times;                // uniform, covering [t0 - maxDelay, tEnd]
    std::vector<double> values;               // times x variables, row-major
    std::size_t first_solution_row = 0;       // rows before this are history

    bool segment_is_history(std::size_t row) const { return row < first_solution_row; }
};

/// Fixed-step classical 4th-order integration; delayed values come from the
/// history functions (exactly) or cubic Hermite interpolation on the
/// accumulated grid. The step is lowered to the largest value that divides
/// every positive delay. Throws DdeError when the state stops being finite.
SolutionGrid solve_dde(const DdeSystem& sys, double t_end, double step);

/// `dX/dt = ...` lines, one per variable, delayed references as X(t-d).
std::string dde_text(const DdeSystem& sys);

nlohmann::json dde_to_json(const DdeSystem& sys);
DdeSystem dde_from_json(const nlohmann::json& j);
bool dde_equal(const DdeSystem& a, const DdeSystem& b);

/// time,<species...>,segment rows, history segment included.
std::string solution_csv(const SolutionGrid& grid, const DdeSystem& sys);

}  // namespace biopepad
