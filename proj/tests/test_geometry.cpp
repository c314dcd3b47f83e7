#include "cloaksim/errors.hpp"
#include "cloaksim/geometry.hpp"

#include <doctest.h>

#include <cmath>

using namespace cloaksim;

TEST_CASE("regular blow-up maps radii piecewise affinely") {
    const double r = 0.5;
    const auto f = regular_blowup(r, 2);
    for (double s : {0.1, 0.3, 0.7, 1.25, 1.9, 2.5}) {
        const Point x = make_point(s * std::cos(0.7), s * std::sin(0.7));
        double expect = s < r ? s / r : (s < 2.0 ? 1.0 + (s - r) / (2.0 - r) : s);
        CHECK(f.forward(x).norm() == doctest::Approx(expect).epsilon(1e-14));
        CHECK((f.inverse(f.forward(x)) - x).norm() < 1e-14);
    }
    CHECK_THROWS_AS(regular_blowup(1.5, 2), PreconditionError);
}

TEST_CASE("map checks are tight") {
    for (const auto& m : {regular_blowup(0.3, 2), singular_map(2), regular_blowup(0.5, 3)}) {
        const auto c = check_map(m, 300, 7);
        CHECK(c.max_inversion_error < 1e-12);
        CHECK(c.max_jacobian_error < 1e-6);
    }
}

TEST_CASE("conformal scaling leaves a 2D isotropic tensor unchanged") {
    const auto a = constant_field(3.0 * identity_tensor(2), "3I");
    const auto p = pushforward(a, dilation_map(2, 1.7), 3.0);
    const Tensor v = p(make_point(0.4, -0.9), 0.0);
    CHECK((v - 3.0 * identity_tensor(2)).norm() < 1e-13);
    // F^r on B_r is a dilation too.
    const auto q = pushforward(a, regular_blowup(0.5, 2));
    CHECK((q(make_point(0.3, 0.2), 0.0) - 3.0 * identity_tensor(2)).norm() < 1e-13);
}

TEST_CASE("push-forward in 3D scales by the dilation factor") {
    const auto p = pushforward(identity_field(3), dilation_map(3, 2.0), 3.0);
    // c² I / c³ = I / c
    CHECK((p(make_point(0.1, 0.2, 0.3), 0.0) - 0.5 * identity_tensor(3)).norm() < 1e-13);
}

TEST_CASE("singular map closed forms") {
    const auto f = singular_map(2);
    CHECK_THROWS_AS(f.forward(make_point(0.0, 0.0)), PreconditionError);
    for (double s : {0.2, 1.0, 1.8}) {
        const Point x = make_point(s, 0.0);
        CHECK(f.forward(x).norm() == doctest::Approx(1.0 + s / 2.0));
        const auto e = singular_cloak_eigenvalues(s, 2);
        const Tensor push = pushforward(identity_field(2), f)(f.forward(x), 0.0);
        CHECK(push(0, 0) == doctest::Approx(e.radial).epsilon(1e-12));
        CHECK(push(1, 1) == doctest::Approx(e.tangential).epsilon(1e-12));
    }
}

TEST_CASE("truncated singular cloak freezes the tensor inside rho") {
    const double rho = 1.5;
    const auto t = truncated_singular_cloak(rho, 2);
    const auto full = singular_cloak_tensor(2);
    const Tensor frozen = t(make_point(0.0, 1.2), 0.0);
    const Tensor at_rho = full(make_point(0.0, rho), 0.0);
    CHECK((frozen - at_rho).norm() < 1e-12);
    CHECK((t(make_point(1.7, 0.0), 0.0) - full(make_point(1.7, 0.0), 0.0)).norm() < 1e-12);
    CHECK((t(make_point(0.5, 0.0), 0.0) - identity_tensor(2)).norm() == 0.0);
    CHECK((t(make_point(2.5, 0.0), 0.0) - identity_tensor(2)).norm() == 0.0);
    CHECK_THROWS_AS(truncated_singular_cloak(2.5, 2), PreconditionError);
}

TEST_CASE("transformed inner tensor") {
    const auto in = constant_field(5.0 * identity_tensor(2), "5I");
    CHECK(transformed_inner_tensor(in, 0.1)(make_point(0.05, 0.0), 0.0)(0, 0) == doctest::Approx(5.0));
    const auto in3 = constant_field(5.0 * identity_tensor(3), "5I");
    CHECK(transformed_inner_tensor(in3, 0.1)(make_point(0.05, 0.0, 0.0), 0.0)(0, 0) == doctest::Approx(50.0));
    CHECK_THROWS(transformed_inner_tensor(in, 0.1)(make_point(0.5, 0.0), 0.0));
}
