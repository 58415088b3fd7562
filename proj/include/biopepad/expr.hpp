#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace biopepad {

/// Arithmetic expression trees shared by functional rates, DDE right-hand
/// sides and history functions. Nodes are immutable and freely shared.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinOp { Add, Sub, Mul, Div, Pow };

struct Expr {
    struct Number {
        double value;
    };
    /// A named reference, either a parameter or a species variable. A
    /// positive `delay` means the reference is evaluated at time t - delay;
    /// plain model expressions always carry delay 0.
    struct Var {
        std::string name;
        double delay = 0.0;
    };
    struct Neg {
        ExprPtr operand;
    };
    struct Binary {
        BinOp op;
        ExprPtr lhs;
        ExprPtr rhs;
    };

    std::variant<Number, Var, Neg, Binary> node;
};

ExprPtr make_number(double value);
ExprPtr make_var(std::string name, double delay = 0.0);
ExprPtr make_neg(ExprPtr operand);
ExprPtr make_binary(BinOp op, ExprPtr lhs, ExprPtr rhs);

class ExprError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Resolves a variable reference to its value; returns nullopt when the name
/// is unknown, which eval_expr turns into an ExprError.
using VarLookup = std::function<std::optional<double>(const std::string& name, double delay)>;

double eval_expr(const Expr& expr, const VarLookup& lookup);

/// Structural equality, including delays on variable references.
bool expr_equal(const Expr& a, const Expr& b);

/// Renders with minimal parentheses; delayed references print as
/// `name(t-delay)`. Numbers use round-trip precision.
std::string render_expr(const Expr& expr);

/// All variable names occurring in the expression (with duplicates).
void collect_vars(const Expr& expr, std::vector<std::string>& out);

/// Substitutes every variable whose name is in `species` by the same
/// variable carrying the given delay. Parameters are left untouched.
ExprPtr delay_species_refs(const ExprPtr& expr,
                           const std::function<bool(const std::string&)>& is_species,
                           double delay);

/// Formats a double so that parsing the text recovers the exact value.
std::string format_double(double value);

}  // namespace biopepad
