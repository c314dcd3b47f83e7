#include "cloaksim/errors.hpp"
#include "cloaksim/expr.hpp"
#include "cloaksim/presets.hpp"

#include <doctest.h>

#include <cmath>

using namespace cloaksim;

TEST_CASE("expression evaluation") {
    ExprVariables v;
    v.theta = M_PI / 3;
    v.k = 2;
    CHECK(Expression::parse("cos(k*theta)")(v) == doctest::Approx(-0.5));
    CHECK(Expression::parse("1 + 2*3")(v) == 7);
    CHECK(Expression::parse("-2^2")(v) == -4);
    CHECK(Expression::parse("2^3^2")(v) == 512);
    CHECK(Expression::parse("(1+2)*3 - 4/2")(v) == 7);
    CHECK(Expression::parse("sqrt(abs(-16)) + exp(0) + log(1)")(v) == 5);
    CHECK(Expression::parse("pi")(v) == doctest::Approx(M_PI));
    CHECK(Expression::parse("2.5e-1")(v) == 0.25);
    v.x = 1;
    v.y = 2;
    v.r = 3;
    v.t = 4;
    CHECK(Expression::parse("x + y*r - t")(v) == 3);
    CHECK(Expression::parse("2 + sin(t)").uses("t"));
    CHECK_FALSE(Expression::parse("x").uses("t"));
}

TEST_CASE("expression syntax errors") {
    CHECK_THROWS_AS(Expression::parse("1 +"), PreconditionError);
    CHECK_THROWS_AS(Expression::parse("foo(1)"), PreconditionError);
    CHECK_THROWS_AS(Expression::parse("(1"), PreconditionError);
    CHECK_THROWS_AS(Expression::parse("1 2"), PreconditionError);
    CHECK_THROWS_AS(Expression::parse("sin 1"), PreconditionError);
}

TEST_CASE("preset keys") {
    const auto k = PresetKey::parse("laminate(1, 4,0.5)");
    CHECK(k.name == "laminate");
    CHECK(k.args == std::vector<double>{1, 4, 0.5});
    CHECK_THROWS_AS(PresetKey::parse("laminate(1,x)"), PreconditionError);
    CHECK_THROWS_AS(PresetKey::parse("laminate(1"), PreconditionError);
}

TEST_CASE("inclusions and presets") {
    const Point p = make_point(0.3, 0.1);
    CHECK(make_inclusion("5I")(p, 7.0)(0, 0) == 5.0);
    CHECK_FALSE(make_inclusion("5I").state_dependent);
    CHECK(make_inclusion("sin5")(p, M_PI / 2)(1, 1) == doctest::Approx(15.0));
    CHECK(make_inclusion("isotropic-sin")(p, 0.0)(0, 0) == doctest::Approx(2.0));
    const auto e = make_inclusion("expr:1 + x^2 + 0.1*sin(t)");
    CHECK(e(make_point(1.0, 0.0), 0.0)(0, 0) == doctest::Approx(2.0));
    CHECK(e.state_dependent);
    CHECK(e.constants.alpha == doctest::Approx(0.9).epsilon(0.01));
    CHECK_THROWS_AS(make_inclusion("expr:x"), PreconditionError);
    CHECK_THROWS_AS(make_inclusion("-2I"), PreconditionError);
    CHECK_THROWS_AS(make_inclusion("nothing"), PreconditionError);

    const auto lam = make_preset("laminate(1,4,0.5)");
    CHECK(lam(make_point(0.1, 0.0), 0.0)(0, 0) == 1.0);
    CHECK(lam(make_point(0.3, 0.0), 0.0)(0, 0) == 4.0);
    CHECK(lam(make_point(-0.1, 0.0), 0.0)(0, 0) == 4.0);

    const auto ts = make_preset("truncated-singular-cloak(1.5)", "5I");
    CHECK(ts(make_point(0.5, 0.0), 0.0)(0, 0) == 5.0);
    const auto rc = make_preset("regular-cloak(0.5)", "5I");
    CHECK(rc(make_point(0.5, 0.0), 0.0)(0, 0) == 5.0);
    CHECK(rc(make_point(2.5, 0.0), 0.0)(0, 0) == 1.0);
    CHECK(make_preset("homogenized-radial(1.5,0.1)")(make_point(2.5, 0), 0)(0, 0) == 1.0);
    CHECK_THROWS_AS(make_preset("regular-cloak(0.5,1)"), PreconditionError);
    CHECK_THROWS_AS(make_preset("mystery(1)"), PreconditionError);
}

TEST_CASE("map keys") {
    CHECK(make_map("regular:0.5").forward(make_point(0.25, 0.0))(0) == doctest::Approx(0.5));
    CHECK(make_map("identity").forward(make_point(0.25, 0.5))(1) == 0.5);
    CHECK(make_map("dilation:2").forward(make_point(0.25, 0.0))(0) == 0.5);
    CHECK(make_map("singular").forward(make_point(1.0, 0.0))(0) == doctest::Approx(1.5));
    CHECK_THROWS_AS(make_map("regular"), PreconditionError);
    CHECK_THROWS_AS(make_map("twist:1"), PreconditionError);
}
