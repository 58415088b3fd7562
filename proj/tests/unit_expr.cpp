#include <doctest.h>

#include "biopepad/expr.hpp"

using namespace biopepad;

TEST_SUITE_BEGIN("expr");

namespace {

VarLookup env(std::initializer_list<std::pair<std::string, double>> vars) {
    std::vector<std::pair<std::string, double>> store(vars);
    return [store](const std::string& name, double) -> std::optional<double> {
        for (const auto& [n, v] : store)
            if (n == name) return v;
        return std::nullopt;
    };
}

}  // namespace

TEST_CASE("evaluation follows arithmetic") {
    auto e = make_binary(BinOp::Add, make_var("a"),
                         make_binary(BinOp::Mul, make_var("b"), make_number(3.0)));
    CHECK(eval_expr(*e, env({{"a", 1.0}, {"b", 2.0}})) == doctest::Approx(7.0));

    auto p = make_binary(BinOp::Pow, make_var("x"), make_number(3.0));
    CHECK(eval_expr(*p, env({{"x", 2.0}})) == 8.0);

    auto n = make_neg(make_var("x"));
    CHECK(eval_expr(*n, env({{"x", 5.0}})) == -5.0);
}

TEST_CASE("small integer powers are exact products") {
    auto p = make_binary(BinOp::Pow, make_var("x"), make_number(1.0));
    const double x = 0.1 + 0.2;  // not representable exactly
    CHECK(eval_expr(*p, env({{"x", x}})) == x);
}

TEST_CASE("unresolved names raise") {
    auto e = make_var("mystery");
    CHECK_THROWS_AS(eval_expr(*e, env({})), ExprError);
}

TEST_CASE("structural equality distinguishes delays") {
    CHECK(expr_equal(*make_var("x", 1.5), *make_var("x", 1.5)));
    CHECK_FALSE(expr_equal(*make_var("x", 1.5), *make_var("x", 0.0)));
    CHECK_FALSE(expr_equal(*make_var("x"), *make_var("y")));
}

TEST_CASE("rendering uses minimal parentheses") {
    auto ab = make_binary(BinOp::Sub, make_var("a"), make_var("b"));
    CHECK(render_expr(*make_binary(BinOp::Sub, ab, make_var("c"))) == "a - b - c");
    CHECK(render_expr(*make_binary(BinOp::Sub, make_var("a"),
                                   make_binary(BinOp::Sub, make_var("b"), make_var("c")))) ==
          "a - (b - c)");
    CHECK(render_expr(*make_binary(BinOp::Mul, ab, make_var("c"))) == "(a - b)*c");
    CHECK(render_expr(*make_var("x", 2.0)) == "x(t-2)");
    CHECK(render_expr(*make_neg(make_binary(BinOp::Add, make_var("a"), make_var("b")))) ==
          "-(a + b)");
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.5, 1.0 / 3.0, 1e-9, 123456.789, -2.5e17, 0.0}) {
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("delaying species references leaves parameters alone") {
    auto e = make_binary(BinOp::Mul, make_var("k"), make_var("A"));
    auto delayed = delay_species_refs(e, [](const std::string& n) { return n == "A"; }, 2.0);
    CHECK(render_expr(*delayed) == "k*A(t-2)");
}

TEST_SUITE_END();
