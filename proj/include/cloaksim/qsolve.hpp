#pragma once

#include "cloaksim/coeff.hpp"
#include "cloaksim/fem.hpp"

#include <vector>

namespace cloaksim {

enum class InitialGuess { Harmonic, Zero };

struct PicardConfig {
    /// Relative L² update tolerance.
    double tol = 1e-8;
    int max_iter = 200;
    /// Relaxation weight ω in (0, 1].
    double damping = 1.0;
    InitialGuess initial = InitialGuess::Harmonic;
    /// Drop ω to 0.5 after 3 non-monotone updates.
    bool auto_damping = true;
    SolverOptions solver;

    /// Throws PreconditionError unless tol > 0, max_iter ≥ 1 and 0 < damping ≤ 1.
    void check() const;
};

struct QSolveResult {
    FeFunction u;
    int iterations = 0;
    /// ‖u^{k+1} − u^k‖_{L²} / max(‖u^k‖_{L²}, 1) per iteration.
    std::vector<double> update_history;
    /// Same with the H¹ seminorm; logged only.
    std::vector<double> h1_update_history;
    bool converged = false;
    double final_damping = 1.0;
};

/// Frozen-coefficient view of A(x, t) with t taken from `state` (nullptr: t = 0).
FrozenCoefficient freeze(const CoefficientField& a, const FeFunction* state);

/// Picard iteration u^{k+1} = (1−ω)u^k + ω·T(u^k), where T(v) solves the linear Dirichlet
/// problem with coefficient A(·, v). Stops when the relative L² update is ≤ tol.
///
/// Non-convergence is returned with converged = false and the full history. For a field that
/// does not depend on t, T is constant: the result is one solve plus one re-application whose
/// update is exactly zero.
///
/// `initial` (vertex values) overrides cfg.initial when given.
QSolveResult solve_quasilinear(const Assembler& assembler, const CoefficientField& a,
                               const Eigen::VectorXd& f, const PicardConfig& cfg = {},
                               const SourceFn* source = nullptr,
                               const Eigen::VectorXd* initial = nullptr);

QSolveResult solve_quasilinear(MeshPtr mesh, const CoefficientField& a, const Eigen::VectorXd& f,
                               const PicardConfig& cfg = {}, const SourceFn* source = nullptr);

/// Discrete harmonic extension of boundary values `g` (ordered as mesh.boundary).
Eigen::VectorXd harmonic_extension(const MeshPtr& mesh, const Eigen::VectorXd& g);

/// Extends several boundary vectors (columns of `g`) with one factorization.
Eigen::MatrixXd harmonic_extensions(const MeshPtr& mesh, const Eigen::MatrixXd& g);

/// ∫ A(x,u)∇u·∇v_g with v_g the discrete harmonic extension of g.
double dn_pairing(const Assembler& assembler, const FeFunction& u, const CoefficientField& a,
                  const Eigen::VectorXd& g);

/// Conormal flux functional r = K(u)·u restricted to boundary vertices (ordered as
/// mesh.boundary). Interior rows vanish for a converged solve, so ⟨Λf, g⟩ = r·g.
Eigen::VectorXd boundary_flux(const Assembler& assembler, const FeFunction& u,
                              const CoefficientField& a);

}  // namespace cloaksim
