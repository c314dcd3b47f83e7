#include "cloaksim/fem.hpp"

#include "cloaksim/errors.hpp"
#include "cloaksim/parallel.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cloaksim {

Quadrature Quadrature::centroid() {
    return {{{1.0 / 3, 1.0 / 3, 1.0 / 3}}, {1.0}};
}

Quadrature Quadrature::edge_midpoint() {
    return {{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
}

Quadrature Quadrature::interior() {
    const double a = 2.0 / 3, b = 1.0 / 6;
    return {{{a, b, b}, {b, a, b}, {b, b, a}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
}

Quadrature Quadrature::degree5() {
    Quadrature q;
    q.bary.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3});
    q.weights.push_back(0.225);
    const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
    const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
    for (auto [a, b, w] : {std::tuple{a1, b1, w1}, std::tuple{a2, b2, w2}}) {
        q.bary.push_back({a, b, b});
        q.bary.push_back({b, a, b});
        q.bary.push_back({b, b, a});
        for (int k = 0; k < 3; ++k) q.weights.push_back(w);
    }
    return q;
}

Quadrature Quadrature::refined(int levels) {
    if (levels < 0) throw PreconditionError("quadrature refinement level must be >= 0");
    using B = std::array<double, 3>;
    std::vector<std::array<B, 3>> tris{{B{1, 0, 0}, B{0, 1, 0}, B{0, 0, 1}}};
    auto mid = [](const B& p, const B& q) {
        return B{0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])};
    };
    for (int l = 0; l < levels; ++l) {
        std::vector<std::array<B, 3>> next;
        next.reserve(tris.size() * 4);
        for (const auto& t : tris) {
            const B m01 = mid(t[0], t[1]), m12 = mid(t[1], t[2]), m20 = mid(t[2], t[0]);
            next.push_back({t[0], m01, m20});
            next.push_back({m01, t[1], m12});
            next.push_back({m20, m12, t[2]});
            next.push_back({m01, m12, m20});
        }
        tris.swap(next);
    }
    Quadrature q;
    const double w = 1.0 / (3.0 * static_cast<double>(tris.size()));
    const Quadrature base = interior();
    for (const auto& t : tris) {
        for (const auto& b : base.bary) {
            B p{};
            for (int k = 0; k < 3; ++k) p[k] = b[0] * t[0][k] + b[1] * t[1][k] + b[2] * t[2][k];
            q.bary.push_back(p);
            q.weights.push_back(w);
        }
    }
    return q;
}

FeFunction::FeFunction(MeshPtr m, Eigen::VectorXd v) : mesh(std::move(m)), values(std::move(v)) {
    if (!mesh || static_cast<std::size_t>(values.size()) != mesh->vertex_count()) {
        throw PreconditionError("FeFunction: value count does not match mesh");
    }
}

double FeFunction::at(const QuadPoint& q) const {
    const auto& t = mesh->triangles[q.tri];
    return q.bary[0] * values[t[0]] + q.bary[1] * values[t[1]] + q.bary[2] * values[t[2]];
}

namespace {

std::array<Vec2, 3> p1_gradients(const std::array<Vec2, 3>& p, double area) {
    std::array<Vec2, 3> g;
    for (int i = 0; i < 3; ++i) {
        const Vec2& a = p[(i + 1) % 3];
        const Vec2& b = p[(i + 2) % 3];
        g[i] = Vec2(a.y() - b.y(), b.x() - a.x()) / (2.0 * area);
    }
    return g;
}

std::array<Vec2, 3> corners(const TriMesh& mesh, std::size_t tri) {
    const auto& t = mesh.triangles[tri];
    return {mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]};
}

Vec2 map_bary(const std::array<Vec2, 3>& p, const std::array<double, 3>& b) {
    return b[0] * p[0] + b[1] * p[1] + b[2] * p[2];
}

void check_coefficient(const Mat2& a, const Vec2& x) {
    const double scale = std::max({std::abs(a(0, 0)), std::abs(a(1, 1)), std::abs(a(0, 1)), 1e-300});
    const bool finite = a.allFinite();
    const bool symmetric = std::abs(a(0, 1) - a(1, 0)) <= 1e-10 * scale;
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const bool spd = a(0, 0) > 0.0 && det > 0.0;
    if (finite && symmetric && spd) return;
    std::ostringstream msg;
    msg << "coefficient is " << (!finite ? "not finite" : !symmetric ? "not symmetric" : "not positive definite")
        << " at x = (" << x.x() << ", " << x.y() << "): [[" << a(0, 0) << ", " << a(0, 1) << "], ["
        << a(1, 0) << ", " << a(1, 1) << "]]";
    throw NumericalError(msg.str());
}

}  // namespace

Vec2 FeFunction::gradient(std::size_t tri) const {
    const auto p = corners(*mesh, tri);
    const auto g = p1_gradients(p, mesh->area(tri));
    const auto& t = mesh->triangles[tri];
    return values[t[0]] * g[0] + values[t[1]] * g[1] + values[t[2]] * g[2];
}

Eigen::Matrix3d element_stiffness(const std::array<Vec2, 3>& p, const Mat2& a) {
    const Vec2 e1 = p[1] - p[0], e2 = p[2] - p[0];
    const double area = 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
    const auto g = p1_gradients(p, area);
    Eigen::Matrix3d k;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) k(i, j) = area * g[i].dot(a * g[j]);
    }
    return k;
}

Assembler::Assembler(MeshPtr mesh, AssemblyOptions options)
    : mesh_(std::move(mesh)), options_(std::move(options)) {
    if (!mesh_) throw PreconditionError("Assembler: null mesh");
    const auto& m = *mesh_;
    const auto n = static_cast<int>(m.vertex_count());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(m.triangle_count() * 9);
    for (const auto& t : m.triangles) {
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) trip.emplace_back(t[i], t[j], 1.0);
        }
    }
    pattern_.resize(n, n);
    pattern_.setFromTriplets(trip.begin(), trip.end());
    pattern_.makeCompressed();
    const int* outer = pattern_.outerIndexPtr();
    const int* inner = pattern_.innerIndexPtr();

    slots_.resize(m.triangle_count());
    grads_.resize(m.triangle_count());
    areas_.resize(m.triangle_count());
    for (std::size_t e = 0; e < m.triangle_count(); ++e) {
        const auto& t = m.triangles[e];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const int* first = inner + outer[t[i]];
                const int* last = inner + outer[t[i] + 1];
                slots_[e][3 * i + j] = static_cast<int>(std::lower_bound(first, last, t[j]) - inner);
            }
        }
        areas_[e] = m.area(e);
        if (!(areas_[e] > 0.0)) throw PreconditionError("Assembler: degenerate or inverted triangle");
        grads_[e] = p1_gradients(corners(m, e), areas_[e]);
    }
}

SparseSystem Assembler::assemble(const FrozenCoefficient& a, const SourceFn* source) const {
    const auto& m = *mesh_;
    const auto& quad = options_.quadrature;
    const std::size_t ne = m.triangle_count();
    std::vector<std::array<double, 9>> local(ne);
    std::vector<std::array<double, 3>> local_load(source ? ne : 0);

    parallel_for(ne, options_.threads, [&](std::size_t e) {
        const auto p = corners(m, e);
        Mat2 avg = Mat2::Zero();
        std::array<double, 3> f{0.0, 0.0, 0.0};
        QuadPoint qp;
        qp.tri = e;
        for (std::size_t q = 0; q < quad.weights.size(); ++q) {
            qp.bary = quad.bary[q];
            qp.x = map_bary(p, qp.bary);
            const Mat2 aq = a(qp);
            check_coefficient(aq, qp.x);
            avg += quad.weights[q] * aq;
            if (source) {
                const double fx = (*source)(qp.x);
                for (int i = 0; i < 3; ++i) f[i] += quad.weights[q] * fx * qp.bary[i];
            }
        }
        // P1 gradients are constant per element, so only the averaged tensor enters.
        const auto& g = grads_[e];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) local[e][3 * i + j] = areas_[e] * g[i].dot(avg * g[j]);
        }
        if (source) {
            for (int i = 0; i < 3; ++i) local_load[e][i] = areas_[e] * f[i];
        }
    });

    SparseSystem sys;
    sys.mesh = mesh_;
    sys.matrix = pattern_;
    double* values = sys.matrix.valuePtr();
    std::fill(values, values + sys.matrix.nonZeros(), 0.0);
    sys.rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.vertex_count()));
    for (std::size_t e = 0; e < ne; ++e) {
        for (int k = 0; k < 9; ++k) values[slots_[e][k]] += local[e][k];
        if (source) {
            for (int i = 0; i < 3; ++i) sys.rhs[m.triangles[e][i]] += local_load[e][i];
        }
    }
    sys.constrained = m.boundary;
    return sys;
}

SparseSystem assemble_frozen(MeshPtr mesh, const std::function<Mat2(const Vec2&)>& a,
                             const SourceFn* source, const AssemblyOptions& options) {
    Assembler assembler(std::move(mesh), options);
    return assembler.assemble([&](const QuadPoint& q) { return a(q.x); }, source);
}

struct DirichletSolver::Iterative {
    Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
};

DirichletSolver::DirichletSolver(SolverOptions options) : options_(options) {}

void DirichletSolver::factorize_direct() const {
    if (!ldlt_) ldlt_ = std::make_shared<Eigen::SimplicialLDLT<ColMatrix>>();
    if (!analyzed_) {
        ldlt_->analyzePattern(kff_);
        analyzed_ = true;
    }
    ldlt_->factorize(kff_);
    if (ldlt_->info() != Eigen::Success) throw NumericalError("sparse factorization failed");
    const auto d = ldlt_->vectorD();
    if (d.size() > 0 && d.minCoeff() <= 0.0) {
        throw NumericalError("stiffness matrix is not positive definite");
    }
}

void DirichletSolver::factorize(const SparseSystem& system) {
    const auto n = static_cast<int>(system.matrix.rows());
    const bool same_layout = static_cast<int>(free_index_.size()) == n &&
                             static_cast<int>(free_vertices_.size() + system.constrained.size()) == n;
    if (!same_layout) {
        free_index_.assign(n, -1);
        fixed_index_.assign(n, -1);
        free_vertices_.clear();
        for (std::size_t c = 0; c < system.constrained.size(); ++c) {
            fixed_index_[system.constrained[c]] = static_cast<int>(c);
        }
        for (int v = 0; v < n; ++v) {
            if (fixed_index_[v] < 0) {
                free_index_[v] = static_cast<int>(free_vertices_.size());
                free_vertices_.push_back(v);
            }
        }
        analyzed_ = false;
        ldlt_.reset();
    }
    const auto nf = static_cast<int>(free_vertices_.size());
    const auto nc = static_cast<int>(system.constrained.size());
    std::vector<Eigen::Triplet<double>> ff, fc;
    ff.reserve(static_cast<std::size_t>(system.matrix.nonZeros()));
    for (int row = 0; row < n; ++row) {
        const int fr = free_index_[row];
        if (fr < 0) continue;
        for (SparseMatrix::InnerIterator it(system.matrix, row); it; ++it) {
            const int col = static_cast<int>(it.col());
            if (free_index_[col] >= 0) {
                ff.emplace_back(fr, free_index_[col], it.value());
            } else {
                fc.emplace_back(fr, fixed_index_[col], it.value());
            }
        }
    }
    kff_.resize(nf, nf);
    kff_.setFromTriplets(ff.begin(), ff.end());
    kff_.makeCompressed();
    kfc_.resize(nf, nc);
    kfc_.setFromTriplets(fc.begin(), fc.end());
    load_ = Eigen::VectorXd(nf);
    for (int i = 0; i < nf; ++i) load_[i] = system.rhs.size() ? system.rhs[free_vertices_[i]] : 0.0;

    if (nf > 0) {
        const Eigen::VectorXd diag = kff_.diagonal();
        if (diag.minCoeff() <= 0.0) throw NumericalError("stiffness matrix has a non-positive diagonal");
        condition_estimate_ = diag.maxCoeff() / diag.minCoeff();
    } else {
        condition_estimate_ = 1.0;
    }

    used_ = options_.kind;
    if (used_ == LinearSolverKind::Auto) {
        const bool small = static_cast<std::size_t>(nf) <= options_.direct_limit;
        used_ = (small || condition_estimate_ > options_.condition_threshold) ? LinearSolverKind::Direct
                                                                               : LinearSolverKind::Iterative;
    }
    fallback_ = LinearSolverKind::Auto;
    if (nf == 0) return;
    if (used_ == LinearSolverKind::Direct) {
        factorize_direct();
    } else {
        if (!iterative_) iterative_ = std::make_shared<Iterative>();
        iterative_->cg.setTolerance(options_.rel_tol);
        iterative_->cg.setMaxIterations(10 * nf);
        iterative_->cg.compute(kff_);
        if (iterative_->cg.info() != Eigen::Success) {
            used_ = LinearSolverKind::Direct;
            factorize_direct();
        }
    }
}

Eigen::VectorXd DirichletSolver::solve(const Eigen::VectorXd& boundary_values, const Eigen::VectorXd* rhs) const {
    if (boundary_values.size() != kfc_.cols()) {
        throw PreconditionError("DirichletSolver: boundary value count does not match constrained vertices");
    }
    const auto n = static_cast<Eigen::Index>(free_index_.size());
    Eigen::VectorXd b = load_;
    if (rhs) {
        if (rhs->size() != n) throw PreconditionError("DirichletSolver: rhs size does not match mesh");
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = (*rhs)[free_vertices_[i]];
    }
    if (kfc_.cols() > 0) b -= kfc_ * boundary_values;

    Eigen::VectorXd xf;
    last_iterations_ = 0;
    if (b.size() > 0) {
        if (used_ == LinearSolverKind::Iterative && fallback_ != LinearSolverKind::Direct) {
            xf = iterative_->cg.solve(b);
            last_iterations_ = static_cast<int>(iterative_->cg.iterations());
            if (iterative_->cg.info() != Eigen::Success) {
                // Stagnated: factorize once and stay direct for this system.
                fallback_ = LinearSolverKind::Direct;
                factorize_direct();
            }
        }
        if (used_ == LinearSolverKind::Direct || fallback_ == LinearSolverKind::Direct) {
            xf = ldlt_->solve(b);
            if (ldlt_->info() != Eigen::Success) throw NumericalError("sparse triangular solve failed");
        }
        if (!xf.allFinite()) throw NumericalError("linear solve produced non-finite values");
    }

    Eigen::VectorXd u(n);
    for (Eigen::Index v = 0; v < n; ++v) {
        u[v] = free_index_[v] >= 0 ? xf[free_index_[v]] : boundary_values[fixed_index_[v]];
    }
    return u;
}

FeFunction solve_dirichlet(const SparseSystem& system, const Eigen::VectorXd& boundary_values,
                           const SolverOptions& options) {
    DirichletSolver solver(options);
    solver.factorize(system);
    return FeFunction(system.mesh, solver.solve(boundary_values));
}

Eigen::VectorXd boundary_data(const TriMesh& mesh, const std::function<double(double theta)>& f) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(mesh.boundary.size()));
    for (std::size_t i = 0; i < mesh.boundary.size(); ++i) {
        const Vec2& p = mesh.vertices[mesh.boundary[i]];
        g[static_cast<Eigen::Index>(i)] = f(std::atan2(p.y(), p.x()));
    }
    return g;
}

Norms norms(const FeFunction& u, const std::function<bool(const Vec2&)>* region) {
    const auto& m = *u.mesh;
    double l2 = 0.0, h1 = 0.0;
    for (std::size_t e = 0; e < m.triangle_count(); ++e) {
        if (region && !(*region)(m.centroid(e))) continue;
        const auto& t = m.triangles[e];
        const double area = m.area(e);
        const double a = u.values[t[0]], b = u.values[t[1]], c = u.values[t[2]];
        l2 += area / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a);
        h1 += area * u.gradient(e).squaredNorm();
    }
    return {std::sqrt(l2), std::sqrt(h1), std::sqrt(l2 + h1)};
}

Norms error_norms(const FeFunction& u, const std::function<double(const Vec2&)>& exact,
                  const std::function<Vec2(const Vec2&)>& exact_gradient) {
    const auto& m = *u.mesh;
    const auto quad = Quadrature::degree5();
    double l2 = 0.0, h1 = 0.0;
    QuadPoint qp;
    for (std::size_t e = 0; e < m.triangle_count(); ++e) {
        const auto p = corners(m, e);
        const double area = m.area(e);
        const Vec2 g = u.gradient(e);
        qp.tri = e;
        for (std::size_t q = 0; q < quad.weights.size(); ++q) {
            qp.bary = quad.bary[q];
            qp.x = map_bary(p, qp.bary);
            const double d = u.at(qp) - exact(qp.x);
            l2 += area * quad.weights[q] * d * d;
            h1 += area * quad.weights[q] * (g - exact_gradient(qp.x)).squaredNorm();
        }
    }
    return {std::sqrt(l2), std::sqrt(h1), std::sqrt(l2 + h1)};
}

double interior_residual(const SparseSystem& system, const Eigen::VectorXd& u) {
    const Eigen::VectorXd r = system.matrix * u - (system.rhs.size() ? system.rhs : Eigen::VectorXd::Zero(u.size()));
    std::vector<char> fixed(static_cast<std::size_t>(u.size()), 0);
    for (int c : system.constrained) fixed[c] = 1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (!fixed[i]) worst = std::max(worst, std::abs(r[i]));
    }
    return worst;
}

}  // namespace cloaksim
