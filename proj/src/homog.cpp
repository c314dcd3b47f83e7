#include "cloaksim/homog.hpp"

#include "cloaksim/errors.hpp"
#include "cloaksim/parallel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cloaksim {

double phi(double t) {
    if (t < 0.0) return 0.0;
    if (t < 1.0) return 0.5 * t * t;
    if (t < 2.0) return 1.0 - 0.5 * (2.0 - t) * (2.0 - t);
    return 1.0;
}

double phi_m(double t, int m) {
    if (m < 4) throw PreconditionError("phi_M needs M >= 4");
    if (t < 0.0) return 0.0;
    if (t < 2.0) return phi(t);
    if (t < m - 2.0) return 1.0;
    return phi(m - t);
}

double zeta(int j, double t, int m) {
    if (j != 1 && j != 2) throw PreconditionError("zeta index must be 1 or 2");
    const double s = t - std::floor(t);
    return j == 1 ? phi_m(2.0 * m * s, m) : phi_m(2.0 * m * (s - 0.5), m);
}

std::vector<double> zeta_breakpoints(int m) {
    if (m < 4) throw PreconditionError("phi_M needs M >= 4");
    std::vector<double> b;
    for (double k : {0.0, 1.0, 2.0, m - 2.0, m - 1.0, static_cast<double>(m)}) {
        b.push_back(k / (2.0 * m));
        b.push_back(0.5 + k / (2.0 * m));
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end(), [](double x, double y) { return std::abs(x - y) < 1e-15; }), b.end());
    return b;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const std::vector<double>& breakpoints, double abs_tol) {
    std::vector<double> pts{a};
    for (double p : breakpoints) {
        if (p > a && p < b) pts.push_back(p);
    }
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i + 1] - pts[i] <= 0.0) continue;
        double err = 0.0;
        double l1 = 0.0;
        const double piece = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, pts[i], pts[i + 1], 15, 1e-12, &err, &l1);
        if (!std::isfinite(piece)) throw NumericalError("quadrature produced a non-finite value");
        if (err > std::max(abs_tol, 1e-11 * l1)) {
            std::ostringstream msg;
            msg << "adaptive quadrature did not reach tolerance on [" << pts[i] << ", " << pts[i + 1] << "], error estimate " << err;
            throw NumericalError(msg.str());
        }
        sum += piece;
    }
    return sum;
}

CoefficientField HomogenizedTensor::as_field(const StructureConstants& constants, const std::string& name,
                                             bool state_dependent) const {
    CoefficientField f;
    f.dim = dim;
    f.eval = eval;
    f.constants = constants;
    f.name = name;
    f.state_dependent = state_dependent;
    return f;
}

RadialMeans radial_means(const RadialProfile& profile, const Point& x, double t,
                         const std::vector<double>& breakpoints) {
    auto checked = [&](double rp) {
        const double s = profile(x, rp, t);
        if (!(s > 0.0) || !std::isfinite(s)) {
            std::ostringstream msg;
            msg << "radial profile is not positive (" << s << ") at |x| = " << x.norm() << ", r' = " << rp
                << ", t = " << t;
            throw NumericalError(msg.str());
        }
        return s;
    };
    const double inv = integrate([&](double rp) { return 1.0 / checked(rp); }, 0.0, 1.0, breakpoints, 1e-10);
    const double mean = integrate([&](double rp) { return checked(rp); }, 0.0, 1.0, breakpoints, 1e-10);
    return {1.0 / inv, mean};
}

HomogenizedTensor radial_homogenized(RadialProfile profile, int dim, std::vector<double> breakpoints) {
    if (dim != 2 && dim != 3) throw PreconditionError("dimension must be 2 or 3");
    HomogenizedTensor h;
    h.dim = dim;
    h.provenance = "closed-form-laminate";
    h.eval = [profile = std::move(profile), dim, breakpoints = std::move(breakpoints)](const Point& x, double t) {
        const RadialMeans m = radial_means(profile, x, t, breakpoints);
        const Tensor pi = radial_projector(x);
        if (x.norm() == 0.0) return Tensor(m.arithmetic * identity_tensor(dim));
        return Tensor(m.harmonic * pi + m.arithmetic * (identity_tensor(dim) - pi));
    };
    return h;
}

namespace {

struct CellMesh {
    int n1 = 0;
    int n2 = 0;
    std::vector<std::array<int, 3>> tris;
    std::vector<std::array<Vec2, 3>> pos;
    std::size_t nodes = 0;
};

CellMesh build_cell_mesh(int n1, int n2) {
    CellMesh m;
    m.n1 = n1;
    m.n2 = n2;
    m.nodes = static_cast<std::size_t>(2 * n1 * n2);
    auto grid = [&](int i, int j) { return ((i % n1) + n1) % n1 + n1 * (((j % n2) + n2) % n2); };
    for (int j = 0; j < n2; ++j) {
        for (int i = 0; i < n1; ++i) {
            const int c = n1 * n2 + i + n1 * j;
            const Vec2 p00(static_cast<double>(i) / n1, static_cast<double>(j) / n2);
            const Vec2 p10(static_cast<double>(i + 1) / n1, static_cast<double>(j) / n2);
            const Vec2 p11(static_cast<double>(i + 1) / n1, static_cast<double>(j + 1) / n2);
            const Vec2 p01(static_cast<double>(i) / n1, static_cast<double>(j + 1) / n2);
            const Vec2 pc((i + 0.5) / n1, (j + 0.5) / n2);
            const int v00 = grid(i, j), v10 = grid(i + 1, j), v11 = grid(i + 1, j + 1), v01 = grid(i, j + 1);
            m.tris.push_back({v00, v10, c});
            m.pos.push_back({p00, p10, pc});
            m.tris.push_back({v10, v11, c});
            m.pos.push_back({p10, p11, pc});
            m.tris.push_back({v11, v01, c});
            m.pos.push_back({p11, p01, pc});
            m.tris.push_back({v01, v00, c});
            m.pos.push_back({p01, p00, pc});
        }
    }
    return m;
}

double tri_area(const std::array<Vec2, 3>& p) {
    const Vec2 e1 = p[1] - p[0], e2 = p[2] - p[0];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

std::array<Vec2, 3> tri_gradients(const std::array<Vec2, 3>& p, double area) {
    std::array<Vec2, 3> g;
    for (int i = 0; i < 3; ++i) {
        const Vec2& a = p[(i + 1) % 3];
        const Vec2& b = p[(i + 2) % 3];
        g[i] = Vec2(a.y() - b.y(), b.x() - a.x()) / (2.0 * area);
    }
    return g;
}

}  // namespace

double CellSolution::corrector_distance(const CellSolution& a, const CellSolution& b, int k) {
    if (a.n1 != b.n1 || a.n2 != b.n2) throw PreconditionError("corrector_distance: different cell meshes");
    const CellMesh mesh = build_cell_mesh(a.n1, a.n2);
    const Eigen::VectorXd d = a.correctors.at(k) - b.correctors.at(k);
    double sum = 0.0;
    for (std::size_t e = 0; e < mesh.tris.size(); ++e) {
        const auto& t = mesh.tris[e];
        const double area = tri_area(mesh.pos[e]);
        const auto g = tri_gradients(mesh.pos[e], area);
        const double x = d[t[0]], y = d[t[1]], z = d[t[2]];
        sum += area / 6.0 * (x * x + y * y + z * z + x * y + y * z + z * x);
        sum += area * (x * g[0] + y * g[1] + z * g[2]).squaredNorm();
    }
    return std::sqrt(sum);
}

CellSolution solve_cell(const CellProblem& problem) {
    if (problem.n1 < 2 || problem.n2 < 2) throw PreconditionError("cell grid needs at least 2 cells per direction");
    if (!problem.a_cell) throw PreconditionError("cell coefficient is empty");
    const CellMesh mesh = build_cell_mesh(problem.n1, problem.n2);
    const Quadrature quad = problem.quad_levels > 0 ? Quadrature::refined(problem.quad_levels) : Quadrature::interior();
    const std::size_t ne = mesh.tris.size();
    std::vector<Mat2> avg(ne);
    std::vector<double> areas(ne);
    std::vector<std::array<Vec2, 3>> grads(ne);
    double voigt = 0.0, reuss_inv = 0.0;
    for (std::size_t e = 0; e < ne; ++e) {
        const auto& p = mesh.pos[e];
        areas[e] = tri_area(p);
        grads[e] = tri_gradients(p, areas[e]);
        Mat2 sum = Mat2::Zero();
        for (std::size_t q = 0; q < quad.weights.size(); ++q) {
            const auto& b = quad.bary[q];
            const Vec2 y = b[0] * p[0] + b[1] * p[1] + b[2] * p[2];
            const Mat2 a = problem.a_cell(y);
            const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
            if (!a.allFinite() || !(a(0, 0) > 0.0) || !(det > 0.0) ||
                std::abs(a(0, 1) - a(1, 0)) > 1e-10 * a.cwiseAbs().maxCoeff()) {
                std::ostringstream msg;
                msg << "cell coefficient is not SPD at y = (" << y.x() << ", " << y.y() << ")";
                throw NumericalError(msg.str());
            }
            sum += quad.weights[q] * a;
            const double s = 0.5 * a.trace();
            voigt += areas[e] * quad.weights[q] * s;
            reuss_inv += areas[e] * quad.weights[q] / s;
        }
        avg[e] = sum;
    }

    // Pin node 0; the pinned system is SPD for a connected periodic mesh.
    const auto n = static_cast<int>(mesh.nodes);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(ne * 9);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n - 1, 2);
    for (std::size_t e = 0; e < ne; ++e) {
        const auto& t = mesh.tris[e];
        const auto& g = grads[e];
        for (int i = 0; i < 3; ++i) {
            if (t[i] == 0) continue;
            for (int j = 0; j < 3; ++j) {
                if (t[j] == 0) continue;
                trip.emplace_back(t[i] - 1, t[j] - 1, areas[e] * g[i].dot(avg[e] * g[j]));
            }
            const Vec2 flux = avg[e].transpose() * g[i];
            rhs(t[i] - 1, 0) -= areas[e] * flux.x();
            rhs(t[i] - 1, 1) -= areas[e] * flux.y();
        }
    }
    Eigen::SparseMatrix<double> k(n - 1, n - 1);
    k.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(k);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
        throw NumericalError("cell system is singular");
    }

    CellSolution sol;
    sol.n1 = problem.n1;
    sol.n2 = problem.n2;
    sol.voigt = voigt;
    sol.reuss = 1.0 / reuss_inv;
    for (int c = 0; c < 2; ++c) {
        const Eigen::VectorXd x = ldlt.solve(rhs.col(c));
        if (ldlt.info() != Eigen::Success || !x.allFinite()) throw NumericalError("cell solve failed");
        Eigen::VectorXd chi(n);
        chi[0] = 0.0;
        chi.tail(n - 1) = x;
        double mean = 0.0;
        for (std::size_t e = 0; e < ne; ++e) {
            const auto& t = mesh.tris[e];
            mean += areas[e] / 3.0 * (chi[t[0]] + chi[t[1]] + chi[t[2]]);
        }
        chi.array() -= mean;
        double check = 0.0;
        for (std::size_t e = 0; e < ne; ++e) {
            const auto& t = mesh.tris[e];
            check += areas[e] / 3.0 * (chi[t[0]] + chi[t[1]] + chi[t[2]]);
        }
        sol.mean_residual = std::max(sol.mean_residual, std::abs(check));
        sol.correctors[c] = std::move(chi);
    }
    for (std::size_t e = 0; e < ne; ++e) {
        const auto& t = mesh.tris[e];
        const auto& g = grads[e];
        std::array<Vec2, 2> w;
        for (int c = 0; c < 2; ++c) {
            const auto& chi = sol.correctors[c];
            w[c] = Vec2::Unit(c) + chi[t[0]] * g[0] + chi[t[1]] * g[1] + chi[t[2]] * g[2];
        }
        for (int kk = 0; kk < 2; ++kk) {
            for (int l = 0; l < 2; ++l) sol.a_star(kk, l) += areas[e] * w[kk].dot(avg[e] * w[l]);
        }
    }
    return sol;
}

HomogenizedTensor cell_homogenized(std::function<CellProblem(const Point& x, double t)> factory) {
    HomogenizedTensor h;
    h.dim = 2;
    h.provenance = "cell-solve";
    h.eval = [factory = std::move(factory)](const Point& x, double t) {
        return Tensor(solve_cell(factory(x, t)).a_star);
    };
    return h;
}

RadialTensorCache RadialTensorCache::build(const HomogenizedTensor& tensor, double r_max, double t_min,
                                           double t_max, double dr, double dt, int threads) {
    if (!(r_max > 0.0) || !(dr > 0.0) || !(dt > 0.0) || t_max < t_min) {
        throw PreconditionError("invalid cache lattice");
    }
    RadialTensorCache c;
    c.r_max = r_max;
    c.dr = dr;
    c.t_min = t_min;
    c.t_max = t_max;
    c.dt = dt;
    c.nr = static_cast<int>(std::ceil(r_max / dr - 1e-9)) + 1;
    c.nt = static_cast<int>(std::ceil((t_max - t_min) / dt - 1e-9)) + 1;
    c.source = tensor.provenance;
    const auto total = static_cast<std::size_t>(c.nr) * static_cast<std::size_t>(c.nt);
    c.radial.assign(total, 0.0);
    c.tangential.assign(total, 0.0);
    parallel_for(total, threads, [&](std::size_t idx) {
        const int i = static_cast<int>(idx % static_cast<std::size_t>(c.nr));
        const int j = static_cast<int>(idx / static_cast<std::size_t>(c.nr));
        const double r = std::min(i * dr, r_max);
        const double t = std::min(t_min + j * dt, t_max);
        Point x = Point::Zero(tensor.dim);
        x[0] = r;
        const Tensor a = tensor.eval(x, t);
        c.radial[idx] = a(0, 0);
        c.tangential[idx] = a(1, 1);
    });
    return c;
}

std::array<double, 2> RadialTensorCache::eigenvalues(double r, double t) const {
    const double rr = std::clamp(r, 0.0, r_max);
    const double tt = std::clamp(t, t_min, t_max);
    const double fi = std::min(rr / dr, static_cast<double>(nr - 1));
    const double fj = nt > 1 ? std::min((tt - t_min) / dt, static_cast<double>(nt - 1)) : 0.0;
    const int i0 = std::min(static_cast<int>(fi), std::max(nr - 2, 0));
    const int j0 = std::min(static_cast<int>(fj), std::max(nt - 2, 0));
    const int i1 = std::min(i0 + 1, nr - 1);
    const int j1 = std::min(j0 + 1, nt - 1);
    const double u = fi - i0, v = fj - j0;
    auto at = [&](const std::vector<double>& a, int i, int j) { return a[static_cast<std::size_t>(i + nr * j)]; };
    auto lerp = [&](const std::vector<double>& a) {
        return (1 - u) * (1 - v) * at(a, i0, j0) + u * (1 - v) * at(a, i1, j0) + (1 - u) * v * at(a, i0, j1) +
               u * v * at(a, i1, j1);
    };
    return {lerp(radial), lerp(tangential)};
}

HomogenizedTensor RadialTensorCache::tensor() const {
    HomogenizedTensor h;
    h.dim = 2;
    h.provenance = "cached:" + source;
    h.eval = [cache = *this](const Point& x, double t) {
        const auto ev = cache.eigenvalues(x.norm(), t);
        if (x.norm() == 0.0) return Tensor(ev[1] * identity_tensor(x.size()));
        const Tensor pi = radial_projector(x);
        return Tensor(ev[0] * pi + ev[1] * (identity_tensor(x.size()) - pi));
    };
    return h;
}

LipschitzReport lipschitz_in_t(const HomogenizedTensor& tensor, const std::vector<Point>& points,
                               std::vector<double> t_grid) {
    std::sort(t_grid.begin(), t_grid.end());
    LipschitzReport rep;
    for (const Point& x : points) {
        std::vector<Tensor> vals;
        vals.reserve(t_grid.size());
        for (double t : t_grid) vals.push_back(tensor.eval(x, t));
        for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
            const double dt = t_grid[i + 1] - t_grid[i];
            if (dt <= 0.0) continue;
            rep.max_ratio = std::max(rep.max_ratio, (vals[i + 1] - vals[i]).cwiseAbs().maxCoeff() / dt);
        }
    }
    return rep;
}

LipschitzReport lipschitz_in_t(const std::function<CellProblem(double t)>& factory, std::vector<double> t_grid) {
    std::sort(t_grid.begin(), t_grid.end());
    LipschitzReport rep;
    rep.has_correctors = true;
    std::vector<CellSolution> sols;
    sols.reserve(t_grid.size());
    for (double t : t_grid) sols.push_back(solve_cell(factory(t)));
    for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
        const double dt = t_grid[i + 1] - t_grid[i];
        if (dt <= 0.0) continue;
        rep.max_ratio = std::max(rep.max_ratio, (sols[i + 1].a_star - sols[i].a_star).cwiseAbs().maxCoeff() / dt);
        for (int k = 0; k < 2; ++k) {
            rep.max_corrector_ratio =
                std::max(rep.max_corrector_ratio, CellSolution::corrector_distance(sols[i + 1], sols[i], k) / dt);
        }
    }
    return rep;
}

CloakTargets cloak_targets(double big_r, double eta, double psi, double r) {
    if (r > 2.0) return {1.0, 1.0};
    if (r > big_r) return {2.0 * (r - 1.0) * (r - 1.0) / (r * r), 2.0};
    const double p = phi((big_r - r) / eta);
    const double c = 2.0 * (big_r - 1.0) * (big_r - 1.0) / (big_r * big_r);
    return {c * (1.0 - p) + psi * p, 2.0 * (1.0 - p) + psi * p};
}

double cloak_profile(double a1, double a2, double r_prime, int big_m) {
    const double s = 1.0 + a1 * zeta(1, r_prime, big_m) - a2 * zeta(2, r_prime, big_m);
    return s * s;
}

namespace {

struct FitIntegrals {
    double inv = 0.0;   // ∫ s⁻²
    double mean = 0.0;  // ∫ s²
    double j1 = 0.0;    // ∫ s⁻³ ζ₁
    double j2 = 0.0;    // ∫ s⁻³ ζ₂
    double k1 = 0.0;    // ∫ s ζ₁
    double k2 = 0.0;    // ∫ s ζ₂
};

/// ζ₁ lives on [0, ½) and ζ₂ on [½, 1), so each half only sees one amplitude.
FitIntegrals fit_integrals(double a1, double a2, int big_m, const std::vector<double>& bp) {
    FitIntegrals r;
    auto z1 = [&](double t) { return zeta(1, t, big_m); };
    auto z2 = [&](double t) { return zeta(2, t, big_m); };
    auto s = [&](double t) { return 1.0 + a1 * z1(t) - a2 * z2(t); };
    r.inv = integrate([&](double t) { const double v = s(t); return 1.0 / (v * v); }, 0.0, 1.0, bp, 1e-14);
    r.mean = integrate([&](double t) { const double v = s(t); return v * v; }, 0.0, 1.0, bp, 1e-14);
    r.j1 = integrate([&](double t) { const double v = s(t); return z1(t) / (v * v * v); }, 0.0, 0.5, bp, 1e-14);
    r.j2 = integrate([&](double t) { const double v = s(t); return z2(t) / (v * v * v); }, 0.5, 1.0, bp, 1e-14);
    r.k1 = integrate([&](double t) { return s(t) * z1(t); }, 0.0, 0.5, bp, 1e-14);
    r.k2 = integrate([&](double t) { return s(t) * z2(t); }, 0.5, 1.0, bp, 1e-14);
    return r;
}

}  // namespace

AmplitudeFit fit_cloak_amplitudes(double h, double m, int big_m, double a_max, double tol) {
    if (!(h > 0.0) || !(m > 0.0) || !std::isfinite(h) || !std::isfinite(m)) {
        throw PreconditionError("amplitude targets must be positive");
    }
    if (h > m * (1.0 + 1e-14)) {
        std::ostringstream msg;
        msg << "harmonic target " << h << " exceeds arithmetic target " << m;
        throw PreconditionError(msg.str());
    }
    const std::vector<double> bp = zeta_breakpoints(big_m);
    constexpr double kA2Max = 1.0 - 1e-9;

    // Thin-transition limit: σ = p on half the period and q on the other half.
    const double disc = std::sqrt(std::max(m * (m - h), 0.0));
    double a1 = std::clamp(std::sqrt(m + disc) - 1.0, 0.0, a_max);
    double a2 = std::clamp(1.0 - std::sqrt(std::max(m - disc, 0.0)), 0.0, kA2Max);

    auto residual = [&](const FitIntegrals& f) {
        return Eigen::Vector2d(h * f.inv - 1.0, f.mean - m);
    };
    FitIntegrals f = fit_integrals(a1, a2, big_m, bp);
    Eigen::Vector2d res = residual(f);
    AmplitudeFit out;
    for (int it = 0; it < 100; ++it) {
        out.iterations = it;
        const double rh = std::abs(1.0 / f.inv - h), rm = std::abs(f.mean - m);
        if (rh <= tol && rm <= tol) break;
        Eigen::Matrix2d jac;
        jac << -2.0 * h * f.j1, 2.0 * h * f.j2, 2.0 * f.k1, -2.0 * f.k2;
        const Eigen::Vector2d step = jac.fullPivLu().solve(-res);
        if (!step.allFinite()) break;
        double lambda = 1.0;
        bool improved = false;
        for (int half = 0; half < 40; ++half) {
            const double n1 = std::clamp(a1 + lambda * step[0], 0.0, a_max);
            const double n2 = std::clamp(a2 + lambda * step[1], 0.0, kA2Max);
            const FitIntegrals g = fit_integrals(n1, n2, big_m, bp);
            const Eigen::Vector2d r2 = residual(g);
            if (r2.norm() < res.norm()) {
                a1 = n1;
                a2 = n2;
                f = g;
                res = r2;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) break;
    }
    out.a1 = a1;
    out.a2 = a2;
    out.residual_harmonic = std::abs(1.0 / f.inv - h);
    out.residual_arithmetic = std::abs(f.mean - m);
    if (out.residual() > std::max(tol, 1e-10)) {
        std::ostringstream msg;
        msg << "no amplitudes in [0, " << a_max << "] x [0, 1) reproduce targets (h, m) = (" << h << ", " << m
            << "); best (a1, a2) = (" << a1 << ", " << a2 << ") with residuals (" << out.residual_harmonic << ", "
            << out.residual_arithmetic << ")";
        throw NumericalError(msg.str());
    }
    return out;
}

void RadialCloakSpec::check() const {
    if (!(big_r > 1.0 && big_r < 2.0)) throw PreconditionError("cloak radius R must lie in (1, 2)");
    if (!(eta > 0.0) || !(big_r - 2.0 * eta > 0.0)) throw PreconditionError("cloak width eta must satisfy 0 < 2 eta < R");
    if (big_m < 4) throw PreconditionError("plateau integer M must be at least 4");
    if (!(eps > 0.0)) throw PreconditionError("microstructure period eps must be positive");
    if (!(psi > 0.0)) throw PreconditionError("interior value psi must be positive");
    if (!(lattice_step > 0.0)) throw PreconditionError("lattice step must be positive");
}

IsotropicCloak::IsotropicCloak(RadialCloakSpec spec) : spec_(spec) {
    spec_.check();
    auto add_segment = [&](double a, double b) {
        const int n = std::max(1, static_cast<int>(std::ceil((b - a) / spec_.lattice_step - 1e-9)));
        for (int i = radii_.empty() ? 0 : 1; i <= n; ++i) radii_.push_back(a + (b - a) * i / n);
    };
    add_segment(core_radius(), spec_.big_r);
    add_segment(spec_.big_r, 2.0);
    fits_.resize(radii_.size());
    for (std::size_t i = 0; i < radii_.size(); ++i) {
        const CloakTargets tg = cloak_targets(spec_.big_r, spec_.eta, spec_.psi, radii_[i]);
        try {
            fits_[i] = fit_cloak_amplitudes(tg.harmonic, tg.arithmetic, spec_.big_m);
        } catch (const NumericalError& e) {
            std::ostringstream msg;
            msg << "amplitude fit failed at |x| = " << radii_[i] << ": " << e.what();
            throw NumericalError(msg.str());
        }
        max_residual_ = std::max(max_residual_, fits_[i].residual());
        sigma_max_ = std::max(sigma_max_, (1.0 + fits_[i].a1) * (1.0 + fits_[i].a1));
        sigma_min_ = std::min(sigma_min_, (1.0 - fits_[i].a2) * (1.0 - fits_[i].a2));
    }
}

double IsotropicCloak::core_radius() const { return spec_.big_r - 2.0 * spec_.eta; }

std::array<double, 2> IsotropicCloak::amplitudes(double r) const {
    if (r < radii_.front() || r > radii_.back()) return {0.0, 0.0};
    const auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
    const auto i1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - radii_.begin(), static_cast<std::ptrdiff_t>(radii_.size() - 1)));
    const std::size_t i0 = i1 == 0 ? 0 : i1 - 1;
    const double span = radii_[i1] - radii_[i0];
    const double w = span > 0.0 ? (r - radii_[i0]) / span : 0.0;
    return {(1 - w) * fits_[i0].a1 + w * fits_[i1].a1, (1 - w) * fits_[i0].a2 + w * fits_[i1].a2};
}

double IsotropicCloak::sigma(double r) const {
    if (r > 2.0) return 1.0;
    const auto a = amplitudes(r);
    return cloak_profile(a[0], a[1], r / spec_.eps, spec_.big_m);
}

CoefficientField IsotropicCloak::field(const std::optional<CoefficientField>& inclusion) const {
    std::ostringstream name;
    name << "isotropic-cloak(" << spec_.big_r << "," << spec_.eta << "," << spec_.eps << ")";
    StructureConstants c{sigma_min_, sigma_max_, 0.0};
    CoefficientField f = isotropic_field(2, [self = *this](const Point& x, double) { return self.sigma(x.norm()); },
                                         c, name.str(), false);
    if (!inclusion) return f;
    return piecewise_field(*inclusion, f, ball_region(core_radius()));
}

CoefficientField IsotropicCloak::target(const std::optional<CoefficientField>& inclusion) const {
    CoefficientField f;
    f.dim = 2;
    std::ostringstream name;
    name << "homogenized-radial(" << spec_.big_r << "," << spec_.eta << ")";
    f.name = name.str();
    f.state_dependent = false;
    const double core = core_radius();
    const RadialCloakSpec s = spec_;
    f.eval = [s, core](const Point& x, double) -> Tensor {
        const double r = x.norm();
        if (r < core || r > 2.0) return identity_tensor(2);
        const CloakTargets tg = cloak_targets(s.big_r, s.eta, s.psi, r);
        const Tensor pi = radial_projector(x);
        return tg.harmonic * pi + tg.arithmetic * (identity_tensor(2) - pi);
    };
    double lo = 1.0, hi = 2.0;
    for (double r : radii_) {
        const CloakTargets tg = cloak_targets(s.big_r, s.eta, s.psi, r);
        lo = std::min(lo, tg.harmonic);
        hi = std::max(hi, tg.arithmetic);
    }
    f.constants = {lo, hi, 0.0};
    if (!inclusion) return f;
    return piecewise_field(*inclusion, f, ball_region(core));
}

std::vector<IsotropicCloak> build_isotropic_cloak_sequence(const std::vector<double>& big_r,
                                                           const std::vector<double>& eta,
                                                           const std::vector<double>& eps, int big_m, double psi) {
    if (big_r.empty() || big_r.size() != eta.size() || big_r.size() != eps.size()) {
        throw PreconditionError("cloak sequence schedules must be nonempty and of equal length");
    }
    std::vector<IsotropicCloak> out;
    out.reserve(big_r.size());
    for (std::size_t n = 0; n < big_r.size(); ++n) {
        RadialCloakSpec s;
        s.big_r = big_r[n];
        s.eta = eta[n];
        s.eps = eps[n];
        s.big_m = big_m;
        s.psi = psi;
        out.emplace_back(s);
    }
    return out;
}

}  // namespace cloaksim
