#include "cloaksim/qsolve.hpp"

#include "cloaksim/errors.hpp"

#include <algorithm>
#include <cmath>

namespace cloaksim {

void PicardConfig::check() const {
    if (!(tol > 0.0)) throw PreconditionError("Picard tolerance must be positive");
    if (max_iter < 1) throw PreconditionError("Picard max_iter must be at least 1");
    if (!(damping > 0.0 && damping <= 1.0)) throw PreconditionError("Picard damping must lie in (0, 1]");
}

FrozenCoefficient freeze(const CoefficientField& a, const FeFunction* state) {
    if (a.dim != 2) throw PreconditionError("finite element solves require a 2D coefficient");
    return [&a, state](const QuadPoint& q) -> Mat2 {
        const double t = state ? state->at(q) : 0.0;
        const Tensor m = a.eval(make_point(q.x.x(), q.x.y()), t);
        return m.topLeftCorner<2, 2>();
    };
}

namespace {

double l2_norm(const MeshPtr& mesh, const Eigen::VectorXd& v) {
    return norms(FeFunction(mesh, v)).l2;
}

double h1_seminorm(const MeshPtr& mesh, const Eigen::VectorXd& v) {
    return norms(FeFunction(mesh, v)).h1_semi;
}

}  // namespace

QSolveResult solve_quasilinear(const Assembler& assembler, const CoefficientField& a,
                               const Eigen::VectorXd& f, const PicardConfig& cfg,
                               const SourceFn* source, const Eigen::VectorXd* initial) {
    cfg.check();
    a.constants.check();
    const MeshPtr& mesh = assembler.mesh();
    if (static_cast<std::size_t>(f.size()) != mesh->boundary.size()) {
        throw PreconditionError("boundary data size does not match the mesh boundary");
    }
    if (!f.allFinite()) throw PreconditionError("boundary data is not finite");

    QSolveResult result;
    result.final_damping = cfg.damping;
    DirichletSolver solver(cfg.solver);

    if (!a.state_dependent) {
        const SparseSystem sys = assembler.assemble(freeze(a, nullptr), source);
        solver.factorize(sys);
        Eigen::VectorXd u = solver.solve(f);
        // T is constant, so u is its fixed point; apply T once more to record the update.
        const Eigen::VectorXd again = solver.solve(f);
        const double scale = std::max(l2_norm(mesh, u), 1.0);
        result.update_history.push_back(l2_norm(mesh, again - u) / scale);
        result.h1_update_history.push_back(h1_seminorm(mesh, again - u) / scale);
        result.iterations = 1;
        result.converged = result.update_history.back() <= cfg.tol;
        result.u = FeFunction(mesh, std::move(again));
        return result;
    }

    Eigen::VectorXd u;
    if (initial) {
        if (initial->size() != static_cast<Eigen::Index>(mesh->vertex_count())) {
            throw PreconditionError("initial field size does not match the mesh");
        }
        u = *initial;
        for (std::size_t i = 0; i < mesh->boundary.size(); ++i) u[mesh->boundary[i]] = f[static_cast<Eigen::Index>(i)];
    } else if (cfg.initial == InitialGuess::Harmonic) {
        u = harmonic_extension(mesh, f);
    } else {
        u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh->vertex_count()));
        for (std::size_t i = 0; i < mesh->boundary.size(); ++i) u[mesh->boundary[i]] = f[static_cast<Eigen::Index>(i)];
    }

    double omega = cfg.damping;
    int non_monotone = 0;
    for (int k = 0; k < cfg.max_iter; ++k) {
        FeFunction state(mesh, u);
        const SparseSystem sys = assembler.assemble(freeze(a, &state), source);
        solver.factorize(sys);
        const Eigen::VectorXd w = solver.solve(f);
        Eigen::VectorXd next = (1.0 - omega) * u + omega * w;
        const Eigen::VectorXd diff = next - u;
        const double scale = std::max(l2_norm(mesh, u), 1.0);
        const double update = l2_norm(mesh, diff) / scale;
        result.update_history.push_back(update);
        result.h1_update_history.push_back(h1_seminorm(mesh, diff) / scale);
        result.iterations = k + 1;
        u = std::move(next);
        if (!std::isfinite(update)) break;
        if (update <= cfg.tol) {
            result.converged = true;
            break;
        }
        const auto n = result.update_history.size();
        if (n >= 2 && update > result.update_history[n - 2]) ++non_monotone;
        if (cfg.auto_damping && non_monotone >= 3 && omega > 0.5) {
            omega = 0.5;
            non_monotone = 0;
        }
    }
    result.final_damping = omega;
    result.u = FeFunction(mesh, std::move(u));
    return result;
}

QSolveResult solve_quasilinear(MeshPtr mesh, const CoefficientField& a, const Eigen::VectorXd& f,
                               const PicardConfig& cfg, const SourceFn* source) {
    Assembler assembler(std::move(mesh));
    return solve_quasilinear(assembler, a, f, cfg, source);
}

Eigen::MatrixXd harmonic_extensions(const MeshPtr& mesh, const Eigen::MatrixXd& g) {
    if (static_cast<std::size_t>(g.rows()) != mesh->boundary.size()) {
        throw PreconditionError("boundary data size does not match the mesh boundary");
    }
    const SparseSystem sys = assemble_frozen(mesh, [](const Vec2&) { return Mat2::Identity().eval(); },
                                             nullptr, {Quadrature::centroid(), 1});
    DirichletSolver solver;
    solver.factorize(sys);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(mesh->vertex_count()), g.cols());
    for (Eigen::Index j = 0; j < g.cols(); ++j) out.col(j) = solver.solve(g.col(j));
    return out;
}

Eigen::VectorXd harmonic_extension(const MeshPtr& mesh, const Eigen::VectorXd& g) {
    return harmonic_extensions(mesh, g).col(0);
}

double dn_pairing(const Assembler& assembler, const FeFunction& u, const CoefficientField& a,
                  const Eigen::VectorXd& g) {
    if (u.mesh != assembler.mesh()) throw PreconditionError("dn_pairing: field and assembler use different meshes");
    if (static_cast<std::size_t>(g.size()) != u.mesh->boundary.size()) {
        throw PreconditionError("dn_pairing: boundary data size does not match the mesh boundary");
    }
    const SparseSystem sys = assembler.assemble(freeze(a, &u));
    const Eigen::VectorXd v = harmonic_extension(u.mesh, g);
    return v.dot(sys.matrix * u.values);
}

Eigen::VectorXd boundary_flux(const Assembler& assembler, const FeFunction& u, const CoefficientField& a) {
    if (u.mesh != assembler.mesh()) throw PreconditionError("boundary_flux: field and assembler use different meshes");
    const SparseSystem sys = assembler.assemble(freeze(a, &u));
    const Eigen::VectorXd r = sys.matrix * u.values;
    const auto& b = u.mesh->boundary;
    Eigen::VectorXd out(static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < b.size(); ++i) out[static_cast<Eigen::Index>(i)] = r[b[i]];
    return out;
}

}  // namespace cloaksim
