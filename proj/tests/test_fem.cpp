#include "cloaksim/errors.hpp"
#include "cloaksim/fem.hpp"
#include "cloaksim/mesh.hpp"

#include <doctest.h>

#include <cmath>

using namespace cloaksim;

namespace {

MeshPtr disk(double h, std::vector<double> align = {}) {
    return std::make_shared<const TriMesh>(build_disk_mesh(2.0, align, h));
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

TEST_CASE("reference element stiffness") {
    const auto k = element_stiffness({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}, Mat2::Identity());
    Eigen::Matrix3d expect;
    expect << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
    CHECK((k - expect).norm() < 1e-15);
}

TEST_CASE("quadrature rules") {
    // Mean of x^a y^b over the reference triangle is 2·a!·b!/(a+b+2)!.
    auto mean = [](const Quadrature& q, int a, int b) {
        double s = 0.0;
        for (std::size_t i = 0; i < q.weights.size(); ++i)
            s += q.weights[i] * std::pow(q.bary[i][1], a) * std::pow(q.bary[i][2], b);
        return s;
    };
    for (const auto& q : {Quadrature::centroid(), Quadrature::edge_midpoint(), Quadrature::interior(),
                          Quadrature::degree5(), Quadrature::refined(2)}) {
        double w = 0.0;
        for (double x : q.weights) w += x;
        CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
    }
    for (int a = 0; a <= 5; ++a)
        for (int b = 0; a + b <= 5; ++b)
            CHECK(mean(Quadrature::degree5(), a, b) ==
                  doctest::Approx(2.0 * factorial(a) * factorial(b) / factorial(a + b + 2)).epsilon(1e-13));
    for (int a = 0; a <= 2; ++a)
        for (int b = 0; a + b <= 2; ++b) {
            const double exact = 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2);
            CHECK(mean(Quadrature::interior(), a, b) == doctest::Approx(exact).epsilon(1e-14));
            CHECK(mean(Quadrature::refined(1), a, b) == doctest::Approx(exact).epsilon(1e-14));
        }
    // Interior points never sit on an edge.
    for (const auto& p : Quadrature::interior().bary)
        for (double l : p) CHECK(l > 0.0);
}

TEST_CASE("patch test: affine data are reproduced exactly") {
    const auto mesh = disk(0.15, {1.0});
    Mat2 a;
    a << 3.0, 0.5, 0.5, 1.0;
    const auto sys = assemble_frozen(mesh, [&](const Vec2&) { return a; });
    Eigen::VectorXd g(mesh->boundary.size());
    for (std::size_t i = 0; i < mesh->boundary.size(); ++i) {
        const Vec2& p = mesh->vertices[mesh->boundary[i]];
        g(static_cast<long>(i)) = 1.0 + 2.0 * p.x() - p.y();
    }
    const auto u = solve_dirichlet(sys, g);
    double err = 0.0;
    for (std::size_t i = 0; i < mesh->vertex_count(); ++i)
        err = std::max(err, std::abs(u.values(static_cast<long>(i)) - (1.0 + 2.0 * mesh->vertices[i].x() - mesh->vertices[i].y())));
    CHECK(err < 1e-10);
    CHECK(interior_residual(sys, u.values) < 1e-10);
}

TEST_CASE("direct and iterative solvers agree") {
    const auto mesh = disk(0.1);
    const auto sys = assemble_frozen(mesh, [](const Vec2& x) { return Mat2((2.0 + x.x() * x.y()) * Mat2::Identity()); });
    const Eigen::VectorXd g = boundary_data(*mesh, [](double th) { return std::sin(2 * th); });
    SolverOptions d, it;
    d.kind = LinearSolverKind::Direct;
    it.kind = LinearSolverKind::Iterative;
    it.rel_tol = 1e-12;
    const auto ud = solve_dirichlet(sys, g, d);
    const auto ui = solve_dirichlet(sys, g, it);
    CHECK((ud.values - ui.values).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("P1 H1 error halves with h") {
    // u = x² − y² is harmonic.
    auto exact = [](const Vec2& p) { return p.x() * p.x() - p.y() * p.y(); };
    auto grad = [](const Vec2& p) { return Vec2(2 * p.x(), -2 * p.y()); };
    std::vector<double> err;
    for (double h : {0.2, 0.1, 0.05}) {
        const auto mesh = disk(h);
        const auto sys = assemble_frozen(mesh, [](const Vec2&) { return Mat2(Mat2::Identity()); });
        Eigen::VectorXd g(mesh->boundary.size());
        for (std::size_t i = 0; i < mesh->boundary.size(); ++i) g(static_cast<long>(i)) = exact(mesh->vertices[mesh->boundary[i]]);
        err.push_back(error_norms(solve_dirichlet(sys, g), exact, grad).h1);
    }
    CHECK(err[0] / err[1] == doctest::Approx(2.0).epsilon(0.15));
    CHECK(err[1] / err[2] == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("exact norms of a linear function") {
    const auto mesh = std::make_shared<const TriMesh>(build_disk_mesh(1.0, {}, 0.1));
    Eigen::VectorXd v(mesh->vertex_count());
    for (std::size_t i = 0; i < mesh->vertex_count(); ++i) v(static_cast<long>(i)) = mesh->vertices[i].x();
    const Norms n = norms(FeFunction(mesh, v));
    double area = 0.0;
    for (std::size_t t = 0; t < mesh->triangle_count(); ++t) area += mesh->area(t);
    CHECK(n.h1_semi == doctest::Approx(std::sqrt(area)).epsilon(1e-12));
    // ∫_{B₁} x² = π/4, up to the polygonal boundary.
    CHECK(n.l2 == doctest::Approx(std::sqrt(M_PI / 4)).epsilon(0.01));
}

TEST_CASE("non-SPD coefficients are reported") {
    const auto mesh = disk(0.3);
    Assembler as(mesh);
    CHECK_THROWS_AS(as.assemble([](const QuadPoint&) { return Mat2(-Mat2::Identity()); }), NumericalError);
    CHECK_THROWS_AS(as.assemble([](const QuadPoint&) {
        Mat2 m;
        m << 1, 2, 0, 1;
        return m;
    }),
                    NumericalError);
}
