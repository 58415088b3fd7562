#include "biopepad/expr.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

namespace biopepad {

ExprPtr make_number(double value) {
    return std::make_shared<Expr>(Expr{Expr::Number{value}});
}

ExprPtr make_var(std::string name, double delay) {
    return std::make_shared<Expr>(Expr{Expr::Var{std::move(name), delay}});
}

ExprPtr make_neg(ExprPtr operand) {
    return std::make_shared<Expr>(Expr{Expr::Neg{std::move(operand)}});
}

ExprPtr make_binary(BinOp op, ExprPtr lhs, ExprPtr rhs) {
    return std::make_shared<Expr>(Expr{Expr::Binary{op, std::move(lhs), std::move(rhs)}});
}

namespace {

// pow() loses exactness for small integer exponents; stoichiometric
// exponents are tiny, so multiply out instead.
double power(double base, double exponent) {
    if (exponent == std::floor(exponent) && exponent >= 0.0 && exponent <= 16.0) {
        double r = 1.0;
        for (int i = 0; i < static_cast<int>(exponent); ++i) r *= base;
        return r;
    }
    return std::pow(base, exponent);
}

}  // namespace

double eval_expr(const Expr& expr, const VarLookup& lookup) {
    if (const auto* n = std::get_if<Expr::Number>(&expr.node)) return n->value;
    if (const auto* v = std::get_if<Expr::Var>(&expr.node)) {
        auto value = lookup(v->name, v->delay);
        if (!value) throw ExprError("unresolved name '" + v->name + "'");
        return *value;
    }
    if (const auto* u = std::get_if<Expr::Neg>(&expr.node)) return -eval_expr(*u->operand, lookup);
    const auto& b = std::get<Expr::Binary>(expr.node);
    const double l = eval_expr(*b.lhs, lookup);
    const double r = eval_expr(*b.rhs, lookup);
    switch (b.op) {
        case BinOp::Add: return l + r;
        case BinOp::Sub: return l - r;
        case BinOp::Mul: return l * r;
        case BinOp::Div: return l / r;
        case BinOp::Pow: return power(l, r);
    }
    throw ExprError("corrupt expression node");
}

bool expr_equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    if (const auto* n = std::get_if<Expr::Number>(&a.node))
        return n->value == std::get<Expr::Number>(b.node).value;
    if (const auto* v = std::get_if<Expr::Var>(&a.node)) {
        const auto& w = std::get<Expr::Var>(b.node);
        return v->name == w.name && v->delay == w.delay;
    }
    if (const auto* u = std::get_if<Expr::Neg>(&a.node))
        return expr_equal(*u->operand, *std::get<Expr::Neg>(b.node).operand);
    const auto& x = std::get<Expr::Binary>(a.node);
    const auto& y = std::get<Expr::Binary>(b.node);
    return x.op == y.op && expr_equal(*x.lhs, *y.lhs) && expr_equal(*x.rhs, *y.rhs);
}

std::string format_double(double value) {
    char buf[64];
    // Shortest representation that parses back to the same double.
    for (int precision : {15, 16, 17}) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
        if (std::strtod(buf, nullptr) == value) return buf;
    }
    return buf;
}

namespace {

int precedence(const Expr& e) {
    if (std::holds_alternative<Expr::Number>(e.node) || std::holds_alternative<Expr::Var>(e.node))
        return 4;
    if (std::holds_alternative<Expr::Neg>(e.node)) return 1;
    switch (std::get<Expr::Binary>(e.node).op) {
        case BinOp::Add:
        case BinOp::Sub: return 1;
        case BinOp::Mul:
        case BinOp::Div: return 2;
        case BinOp::Pow: return 3;
    }
    return 0;
}

void render(const Expr& e, std::string& out) {
    if (const auto* n = std::get_if<Expr::Number>(&e.node)) {
        out += format_double(n->value);
        return;
    }
    if (const auto* v = std::get_if<Expr::Var>(&e.node)) {
        out += v->name;
        if (v->delay != 0.0) {
            out += "(t-";
            out += format_double(v->delay);
            out += ")";
        }
        return;
    }
    if (const auto* u = std::get_if<Expr::Neg>(&e.node)) {
        out += "-";
        const bool wrap = precedence(*u->operand) <= 1;
        if (wrap) out += "(";
        render(*u->operand, out);
        if (wrap) out += ")";
        return;
    }
    const auto& b = std::get<Expr::Binary>(e.node);
    const int prec = precedence(e);
    auto child = [&](const Expr& c, bool right_side) {
        int cp = precedence(c);
        // Left-associative operators need parens on an equal-precedence
        // right child; Pow is right-associative so it is the mirror case.
        bool wrap;
        if (b.op == BinOp::Pow)
            wrap = right_side ? cp < prec : cp <= prec;
        else
            wrap = right_side ? cp <= prec : cp < prec;
        if (wrap) out += "(";
        render(c, out);
        if (wrap) out += ")";
    };
    child(*b.lhs, false);
    switch (b.op) {
        case BinOp::Add: out += " + "; break;
        case BinOp::Sub: out += " - "; break;
        case BinOp::Mul: out += "*"; break;
        case BinOp::Div: out += "/"; break;
        case BinOp::Pow: out += "^"; break;
    }
    child(*b.rhs, true);
}

}  // namespace

std::string render_expr(const Expr& expr) {
    std::string out;
    render(expr, out);
    return out;
}

void collect_vars(const Expr& expr, std::vector<std::string>& out) {
    if (const auto* v = std::get_if<Expr::Var>(&expr.node)) {
        out.push_back(v->name);
        return;
    }
    if (const auto* u = std::get_if<Expr::Neg>(&expr.node)) {
        collect_vars(*u->operand, out);
        return;
    }
    if (const auto* b = std::get_if<Expr::Binary>(&expr.node)) {
        collect_vars(*b->lhs, out);
        collect_vars(*b->rhs, out);
    }
}

ExprPtr delay_species_refs(const ExprPtr& expr,
                           const std::function<bool(const std::string&)>& is_species,
                           double delay) {
    if (const auto* v = std::get_if<Expr::Var>(&expr->node)) {
        if (is_species(v->name)) return make_var(v->name, delay);
        return expr;
    }
    if (const auto* u = std::get_if<Expr::Neg>(&expr->node))
        return make_neg(delay_species_refs(u->operand, is_species, delay));
    if (const auto* b = std::get_if<Expr::Binary>(&expr->node))
        return make_binary(b->op, delay_species_refs(b->lhs, is_species, delay),
                           delay_species_refs(b->rhs, is_species, delay));
    return expr;
}

}  // namespace biopepad
