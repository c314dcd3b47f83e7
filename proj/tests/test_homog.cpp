#include "cloaksim/errors.hpp"
#include "cloaksim/homog.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <doctest.h>

#include <cmath>
#include <random>

using namespace cloaksim;

namespace {

double ramp(double t) {
    if (t <= 0) return 0;
    if (t <= 1) return t * t / 2;
    if (t <= 2) return 1 - (2 - t) * (2 - t) / 2;
    return 1;
}

double plateau(double t, int m) {
    if (t < 0) return 0;
    if (t < 2) return ramp(t);
    if (t < m - 2) return 1;
    return ramp(m - t);
}

// ∫₀¹ g(σ(r′)) with Gauss–Legendre on the polynomial pieces of the profile.
double piecewise_mean(double a1, double a2, int m, double (*g)(double)) {
    std::vector<double> cuts;
    for (double k : {0.0, 1.0, 2.0, m - 2.0, m - 1.0, double(m)}) {
        cuts.push_back(k / (2.0 * m));
        cuts.push_back(0.5 + k / (2.0 * m));
    }
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    double s = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] <= cuts[i]) continue;
        s += boost::math::quadrature::gauss<double, 20>::integrate(
            [&](double r) {
                const double z1 = plateau(2.0 * m * r, m);
                const double z2 = plateau(2.0 * m * (r - 0.5), m);
                const double b = 1 + a1 * z1 - a2 * z2;
                return g(b * b);
            },
            cuts[i], cuts[i + 1]);
    }
    return s;
}

double inv(double s) { return 1 / s; }
double ident(double s) { return s; }

}  // namespace

TEST_CASE("ramp and plateau profiles") {
    CHECK(phi(-1) == 0);
    CHECK(phi(0) == 0);
    CHECK(phi(1) == 0.5);
    CHECK(phi(2) == 1);
    CHECK(phi(0.5) == 0.125);
    CHECK(phi(1.5) == 0.875);
    CHECK(phi(7) == 1);
    const int m = 8;
    CHECK(phi_m(1, m) == 0.5);
    CHECK(phi_m(4, m) == 1);
    CHECK(phi_m(7, m) == 0.5);
    CHECK(phi_m(8, m) == 0);
    CHECK(phi_m(9, m) == 0);
    CHECK(phi_m(-0.5, m) == 0);
    CHECK_THROWS_AS(phi_m(1, 3), PreconditionError);
    CHECK(zeta(1, 1.0 / 16, m) == 0.5);
    CHECK(zeta(1, 0.25, m) == 1);
    CHECK(zeta(1, 0.5, m) == 0);
    CHECK(zeta(2, 0.5 + 1.0 / 16, m) == 0.5);
    CHECK(zeta(2, 0.25, m) == 0);
    CHECK(zeta(1, 1.25, m) == zeta(1, 0.25, m));
    CHECK(zeta(2, -0.25, m) == zeta(2, 0.75, m));
    for (double t = 0; t < 1; t += 0.01) {
        CHECK(zeta(1, t, m) == plateau(2 * m * t, m));
        CHECK(zeta(1, t, m) * zeta(2, t, m) == 0);
    }
}

TEST_CASE("adaptive integration") {
    CHECK(integrate([](double x) { return x * x; }, 0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-13));
    CHECK(integrate([](double x) { return x < 0.3 ? 1.0 : 2.0; }, 0, 1, {0.3}) == doctest::Approx(1.7).epsilon(1e-13));
}

TEST_CASE("radial laminate means and tensor") {
    RadialProfile lam = [](const Point&, double r, double) { return r < 0.5 ? 1.0 : 4.0; };
    const auto m = radial_means(lam, make_point(1, 0), 0.0, {0.5});
    CHECK(m.harmonic == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(m.arithmetic == doctest::Approx(2.5).epsilon(1e-12));
    const auto a = radial_homogenized(lam, 2, {0.5});
    const Tensor t = a(make_point(0, 2), 0.0);
    CHECK(t(1, 1) == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(t(0, 0) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(std::abs(t(0, 1)) < 1e-14);
    RadialProfile bad = [](const Point&, double r, double) { return r - 0.5; };
    CHECK_THROWS_AS(radial_means(bad, make_point(1, 0), 0.0), NumericalError);
}

TEST_CASE("cell problem oracles") {
    CellProblem lam;
    lam.a_cell = [](const Vec2& y) { return Mat2((y.x() < 0.5 ? 1.0 : 4.0) * Mat2::Identity()); };
    lam.n1 = lam.n2 = 16;
    const auto s = solve_cell(lam);
    CHECK(s.a_star(0, 0) == doctest::Approx(1.6).epsilon(1e-10));
    CHECK(s.a_star(1, 1) == doctest::Approx(2.5).epsilon(1e-10));
    CHECK(s.mean_residual < 1e-12);

    CellProblem c;
    c.a_cell = [](const Vec2&) { return Mat2(3.0 * Mat2::Identity()); };
    c.n1 = c.n2 = 8;
    const auto sc = solve_cell(c);
    CHECK((sc.a_star - 3.0 * Mat2::Identity()).norm() < 1e-12);
    CHECK(sc.correctors[0].norm() < 1e-12);

    // Two-phase checkerboard in 2D: A* = √(ab)·I.
    CellProblem cb;
    cb.a_cell = [](const Vec2& y) { return Mat2(((y.x() < 0.5) == (y.y() < 0.5) ? 1.0 : 4.0) * Mat2::Identity()); };
    cb.n1 = cb.n2 = 64;
    const auto scb = solve_cell(cb);
    CHECK(scb.a_star(0, 0) == doctest::Approx(2.0).epsilon(0.03));
    CHECK(scb.a_star(1, 1) == doctest::Approx(2.0).epsilon(0.03));

    CellProblem neg;
    neg.a_cell = [](const Vec2&) { return Mat2(-Mat2::Identity()); };
    CHECK_THROWS_AS(solve_cell(neg), NumericalError);
}

TEST_CASE("Voigt and Reuss bound the cell tensor") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> val(0.5, 10.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::array<double, 16> v{};
        for (double& x : v) x = val(rng);
        CellProblem p;
        p.a_cell = [v](const Vec2& y) {
            const int i = std::min(3, int(y.x() * 4)), j = std::min(3, int(y.y() * 4));
            return Mat2(v[i + 4 * j] * Mat2::Identity());
        };
        p.n1 = p.n2 = 16;
        const auto s = solve_cell(p);
        Eigen::SelfAdjointEigenSolver<Mat2> e(s.a_star);
        CHECK(e.eigenvalues()(0) >= s.reuss - 1e-10);
        CHECK(e.eigenvalues()(1) <= s.voigt + 1e-10);
    }
}

TEST_CASE("Lipschitz in t") {
    auto factory = [](bool dependent) {
        return [dependent](double t) {
            CellProblem p;
            const double a = dependent ? 2.0 + std::sin(t) : 2.0;
            p.a_cell = [a](const Vec2& y) { return Mat2((y.x() < 0.5 ? a : 4.0) * Mat2::Identity()); };
            p.n1 = p.n2 = 8;
            return p;
        };
    };
    const std::vector<double> grid{-1, -0.5, 0, 0.5, 1};
    const auto still = lipschitz_in_t(factory(false), grid);
    CHECK(still.max_ratio == 0.0);
    CHECK(still.max_corrector_ratio == 0.0);
    const auto moving = lipschitz_in_t(factory(true), grid);
    CHECK(moving.has_correctors);
    CHECK(std::isfinite(moving.max_ratio));
    CHECK(moving.max_ratio > 0.0);
    // Secants are bounded by the largest derivative of the two means: d/dt of the harmonic mean
    // 8a/(4 + a), a = 2 + sin t, and of the arithmetic mean (a + 4)/2.
    double bound = 0.0;
    for (double t = -1.0; t <= 1.0; t += 1e-4) {
        const double a = 2.0 + std::sin(t);
        bound = std::max({bound, 32.0 * std::abs(std::cos(t)) / ((4.0 + a) * (4.0 + a)), 0.5 * std::abs(std::cos(t))});
    }
    CHECK(moving.max_ratio <= bound * (1.0 + 1e-6));
    CHECK(moving.max_ratio >= 0.5 * bound);
}

TEST_CASE("tensor cache interpolates") {
    RadialProfile p = [](const Point& x, double r, double t) { return (r < 0.5 ? 1.0 : 4.0) + 0.1 * x.norm() + 0.2 * t; };
    const auto exact = radial_homogenized(p, 2, {0.5});
    const auto cache = RadialTensorCache::build(exact, 2.0, 0.0, 1.0, 0.02, 0.1);
    const Point x = make_point(0.0, 1.0);
    CHECK((cache.tensor()(x, 0.5) - exact(x, 0.5)).norm() < 1e-12);
    const Point y = make_point(0.0, 1.013);
    CHECK((cache.tensor()(y, 0.537) - exact(y, 0.537)).norm() < 1e-4);
}

TEST_CASE("cloak amplitude fits") {
    const int m = 8;
    const auto fit = fit_cloak_amplitudes(2.0 / 9.0, 2.0, m);
    CHECK(fit.residual() < 1e-12);
    CHECK(1.0 / piecewise_mean(fit.a1, fit.a2, m, inv) == doctest::Approx(2.0 / 9.0).epsilon(1e-11));
    CHECK(piecewise_mean(fit.a1, fit.a2, m, ident) == doctest::Approx(2.0).epsilon(1e-11));
    CHECK(fit.a2 >= 0.0);
    CHECK(fit.a2 < 1.0);
    CHECK(fit.a1 >= 0.0);
    CHECK_THROWS_AS(fit_cloak_amplitudes(3.0, 2.0, m), PreconditionError);
    CHECK(cloak_profile(fit.a1, fit.a2, 0.25, m) == doctest::Approx((1 + fit.a1) * (1 + fit.a1)));
}

TEST_CASE("cloak targets") {
    const double r0 = 1.5, eta = 0.1;
    auto t = cloak_targets(r0, eta, 1.0, 2.5);
    CHECK(t.harmonic == 1.0);
    CHECK(t.arithmetic == 1.0);
    t = cloak_targets(r0, eta, 1.0, 1.8);
    CHECK(t.harmonic == doctest::Approx(2 * 0.8 * 0.8 / (1.8 * 1.8)));
    CHECK(t.arithmetic == doctest::Approx(2.0));
    // Below R the targets blend toward ψ with the ramp of (R − r)/η.
    t = cloak_targets(r0, eta, 1.0, 1.4);
    const double c = 2 * 0.25 / 2.25, w = ramp(1.0);
    CHECK(t.harmonic == doctest::Approx(c * (1 - w) + w));
    CHECK(t.arithmetic == doctest::Approx(2 * (1 - w) + w));
    t = cloak_targets(r0, eta, 1.0, 1.25);
    CHECK(t.harmonic == doctest::Approx(1.0));
}

TEST_CASE("isotropic cloak") {
    RadialCloakSpec s;
    s.eps = 0.05;
    const IsotropicCloak cloak(s);
    CHECK(cloak.max_fit_residual() < 1e-10);
    CHECK(cloak.core_radius() == doctest::Approx(1.3));
    CHECK(cloak.sigma(2.5) == 1.0);
    CHECK(cloak.sigma(1.0) == 1.0);
    const auto target = cloak.target();
    const Tensor t = target(make_point(1.8, 0.0), 0.0);
    CHECK(t(0, 0) == doctest::Approx(2 * 0.64 / 3.24).epsilon(1e-12));
    CHECK(t(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
    const auto f = cloak.field(constant_field(5.0 * identity_tensor(2), "5I"));
    CHECK(f(make_point(0.5, 0.0), 0.0)(0, 0) == 5.0);
    s.eta = 0.9;
    CHECK_THROWS_AS(s.check(), PreconditionError);
    CHECK_THROWS_AS(build_isotropic_cloak_sequence({1.5}, {0.1, 0.1}, {0.05}), PreconditionError);
}
