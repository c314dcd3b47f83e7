#include "cloaksim/errors.hpp"
#include "cloaksim/mesh.hpp"
#include "cloaksim/qsolve.hpp"

#include <doctest.h>

#include <cmath>

using namespace cloaksim;

namespace {

MeshPtr disk(double h) { return std::make_shared<const TriMesh>(build_disk_mesh(2.0, {}, h)); }

CoefficientField sin_field() {
    return isotropic_field(2, [](const Point&, double t) { return 2.0 + std::sin(t); }, {1, 3, 1}, "sin");
}

// Kirchhoff transform of 2 + sin: K(u) = 2u + 1 − cos u; w = K(u) is harmonic.
double kirchhoff_inverse(double w) {
    double u = w / 2.0;
    for (int i = 0; i < 60; ++i) u -= (2.0 * u + 1.0 - std::cos(u) - w) / (2.0 + std::sin(u));
    return u;
}

}  // namespace

TEST_CASE("t-independent fields take one Picard iteration") {
    const auto mesh = disk(0.1);
    const auto a = constant_field(5.0 * identity_tensor(2), "5I");
    const auto r = solve_quasilinear(mesh, a, boundary_data(*mesh, [](double th) { return std::cos(th); }));
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    REQUIRE(r.update_history.size() == 1);
    CHECK(r.update_history[0] == 0.0);
}

TEST_CASE("Picard matches the Kirchhoff-transform solution") {
    // w = x is harmonic, so u = K⁻¹(x) solves −div((2 + sin u)∇u) = 0.
    std::vector<double> err;
    for (double h : {0.1, 0.05}) {
        const auto mesh = disk(h);
        Eigen::VectorXd g(mesh->boundary.size());
        for (std::size_t i = 0; i < mesh->boundary.size(); ++i)
            g(static_cast<long>(i)) = kirchhoff_inverse(mesh->vertices[mesh->boundary[i]].x());
        PicardConfig cfg;
        cfg.tol = 1e-11;
        const auto r = solve_quasilinear(mesh, sin_field(), g, cfg);
        REQUIRE(r.converged);
        double e = 0.0;
        for (std::size_t i = 0; i < mesh->vertex_count(); ++i)
            e = std::max(e, std::abs(r.u.values(static_cast<long>(i)) - kirchhoff_inverse(mesh->vertices[i].x())));
        err.push_back(e);
    }
    CHECK(err[0] < 5e-3);
    CHECK(err[0] / err[1] > 2.5);
}

TEST_CASE("solutions do not depend on the initial guess") {
    const auto mesh = disk(0.1);
    const Eigen::VectorXd g = boundary_data(*mesh, [](double th) { return 2.0 * std::cos(th); });
    PicardConfig a, b;
    a.tol = b.tol = 1e-10;
    b.initial = InitialGuess::Zero;
    const auto ra = solve_quasilinear(mesh, sin_field(), g, a);
    const auto rb = solve_quasilinear(mesh, sin_field(), g, b);
    REQUIRE(ra.converged);
    REQUIRE(rb.converged);
    CHECK((ra.u.values - rb.u.values).norm() / ra.u.values.norm() < 1e-9);
    CHECK(rb.iterations > 1);
}

TEST_CASE("harmonic extension and DN pairing") {
    const auto mesh = disk(0.1);
    const Eigen::VectorXd g = boundary_data(*mesh, [](double th) { return std::cos(th); });
    const Eigen::VectorXd v = harmonic_extension(mesh, g);
    Eigen::MatrixXd two(g.size(), 2);
    two << g, 2 * g;
    const Eigen::MatrixXd vv = harmonic_extensions(mesh, two);
    CHECK((vv.col(0) - v).norm() < 1e-12);
    CHECK((vv.col(1) - 2 * v).norm() < 1e-11);
    Assembler as(mesh);
    const FeFunction u(mesh, v);
    // ⟨Λ₁ cos, cos⟩ = π on ∂B₂.
    CHECK(dn_pairing(as, u, identity_field(2), g) == doctest::Approx(M_PI).epsilon(0.02));
    CHECK(boundary_flux(as, u, identity_field(2)).dot(g) == doctest::Approx(dn_pairing(as, u, identity_field(2), g)).epsilon(1e-10));
}

TEST_CASE("Picard configuration is validated") {
    PicardConfig c;
    c.damping = 0.0;
    CHECK_THROWS_AS(c.check(), PreconditionError);
    c.damping = 1.0;
    c.tol = -1.0;
    CHECK_THROWS_AS(c.check(), PreconditionError);
}

TEST_CASE("non-convergence is reported, not thrown") {
    const auto mesh = disk(0.2);
    PicardConfig c;
    c.max_iter = 1;
    c.tol = 1e-14;
    const auto r = solve_quasilinear(mesh, sin_field(), boundary_data(*mesh, [](double th) { return 3 * std::cos(th); }), c);
    CHECK_FALSE(r.converged);
    CHECK(r.update_history.size() == 1);
}
