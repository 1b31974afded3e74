#include "catch_amalgamated.hpp"

#include "forchlab/expression.hpp"

using forchlab::Expression;
using Catch::Approx;

TEST_CASE("expression: arithmetic and precedence") {
    CHECK(Expression::parse("1+2*3").eval(0) == Approx(7.0));
    CHECK(Expression::parse("(1+2)*3").eval(0) == Approx(9.0));
    CHECK(Expression::parse("2^3^2").eval(0) == Approx(512.0));  // right associative
    CHECK(Expression::parse("-2^2").eval(0) == Approx(-4.0));
    CHECK(Expression::parse("2^-1").eval(0) == Approx(0.5));
    CHECK(Expression::parse("7/2/2").eval(0) == Approx(1.75));
}

TEST_CASE("expression: variables and functions") {
    auto e = Expression::parse("exp(-t)*sin(pi*x)");
    CHECK(e.eval(0.5, 0.0, 0.0) == Approx(1.0));
    CHECK(e.eval(0.5, 0.0, 1.0) == Approx(std::exp(-1.0)));
    CHECK(Expression::parse("min(x, y)").eval(2.0, 3.0) == Approx(2.0));
    CHECK(Expression::parse("max(x, y)").eval(2.0, 3.0) == Approx(3.0));
    CHECK(Expression::parse("ln(exp(2))").eval(0) == Approx(2.0));
    CHECK(Expression::parse("sqrt(abs(-9))").eval(0) == Approx(3.0));
    CHECK(Expression::parse("t^0.25").eval(0, 0, 16.0) == Approx(2.0));
}

TEST_CASE("expression: parse errors carry position") {
    CHECK_THROWS_AS(Expression::parse("1 +"), forchlab::ExprError);
    CHECK_THROWS_AS(Expression::parse("sin 2"), forchlab::ExprError);
    CHECK_THROWS_AS(Expression::parse("foo(2)"), forchlab::ExprError);
    CHECK_THROWS_AS(Expression::parse("(1+2"), forchlab::ExprError);
    CHECK_THROWS_AS(Expression::parse("1 2"), forchlab::ExprError);
    try {
        Expression::parse("1 + bogus");
    } catch (const forchlab::ExprError& err) {
        CHECK(err.position == 4);
    }
}
