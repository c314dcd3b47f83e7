#pragma once

#include "cloaksim/mesh.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cloaksim {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Triangle quadrature in barycentric coordinates; weights sum to one.
struct Quadrature {
    std::vector<std::array<double, 3>> bary;
    std::vector<double> weights;

    static Quadrature centroid();
    /// Exact for quadratics; points on the edges.
    static Quadrature edge_midpoint();
    /// Exact for quadratics; points strictly inside, so coefficients that jump across element
    /// edges (aligned circles, cell interfaces) are sampled on the element's own side.
    static Quadrature interior();
    /// 7-point rule, exact for degree 5.
    static Quadrature degree5();
    /// Interior rule on each of the 4^levels subtriangles of a uniform subdivision.
    /// Resolves coefficients that oscillate inside an element.
    static Quadrature refined(int levels);
};

struct QuadPoint {
    Vec2 x;
    std::size_t tri = 0;
    std::array<double, 3> bary{};
};

/// Coefficient frozen for one assembly; may read the quadrature point's element and
/// barycentric coordinates (e.g. to interpolate the current iterate).
using FrozenCoefficient = std::function<Mat2(const QuadPoint&)>;
using SourceFn = std::function<double(const Vec2&)>;

/// P1 scalar field, one value per mesh vertex.
struct FeFunction {
    MeshPtr mesh;
    Eigen::VectorXd values;

    FeFunction() = default;
    FeFunction(MeshPtr m, Eigen::VectorXd v);

    double at(const QuadPoint& q) const;
    Vec2 gradient(std::size_t tri) const;
};

struct SparseSystem {
    MeshPtr mesh;
    SparseMatrix matrix;
    Eigen::VectorXd rhs;
    /// Dirichlet vertices (the outer boundary loop).
    std::vector<int> constrained;
};

struct AssemblyOptions {
    Quadrature quadrature = Quadrature::interior();
    int threads = 1;
};

/// P1 stiffness assembly with a reusable sparsity pattern. Element matrices are computed in
/// parallel and scattered in element order, so results do not depend on the thread count.
class Assembler {
public:
    Assembler(MeshPtr mesh, AssemblyOptions options = {});

    /// Entries ∫ A∇φ_i·∇φ_j and load ∫ f φ_i. Throws NumericalError naming the quadrature
    /// point where A is asymmetric or not positive definite.
    SparseSystem assemble(const FrozenCoefficient& a, const SourceFn* source = nullptr) const;

    const MeshPtr& mesh() const { return mesh_; }
    const AssemblyOptions& options() const { return options_; }

private:
    MeshPtr mesh_;
    AssemblyOptions options_;
    SparseMatrix pattern_;
    std::vector<std::array<int, 9>> slots_;
    std::vector<std::array<Vec2, 3>> grads_;
    std::vector<double> areas_;
};

/// Convenience wrapper around Assembler for a point-wise coefficient.
SparseSystem assemble_frozen(MeshPtr mesh, const std::function<Mat2(const Vec2&)>& a,
                             const SourceFn* source = nullptr, const AssemblyOptions& options = {});

/// Local stiffness of one triangle for a constant coefficient (row/col in vertex order).
Eigen::Matrix3d element_stiffness(const std::array<Vec2, 3>& corners, const Mat2& a);

enum class LinearSolverKind { Auto, Direct, Iterative };

struct SolverOptions {
    LinearSolverKind kind = LinearSolverKind::Auto;
    double rel_tol = 1e-10;
    /// Auto switches to factorization above this condition estimate.
    double condition_threshold = 1e8;
    /// Auto factorizes systems with at most this many free unknowns.
    std::size_t direct_limit = 600000;
};

/// Dirichlet solve on the free (non-boundary) vertices. `factorize` may be called repeatedly
/// with systems sharing one sparsity pattern; the symbolic analysis is reused.
class DirichletSolver {
public:
    explicit DirichletSolver(SolverOptions options = {});

    void factorize(const SparseSystem& system);

    /// Full vertex vector with `boundary_values` (ordered as system.constrained) imposed
    /// exactly. `rhs` defaults to the assembled load.
    Eigen::VectorXd solve(const Eigen::VectorXd& boundary_values,
                          const Eigen::VectorXd* rhs = nullptr) const;

    LinearSolverKind used() const { return used_; }
    double condition_estimate() const { return condition_estimate_; }
    int last_iterations() const { return last_iterations_; }

private:
    using ColMatrix = Eigen::SparseMatrix<double>;

    SolverOptions options_;
    LinearSolverKind used_ = LinearSolverKind::Direct;
    double condition_estimate_ = 0.0;
    mutable int last_iterations_ = 0;
    mutable LinearSolverKind fallback_ = LinearSolverKind::Auto;
    std::vector<int> free_index_;   // vertex -> free slot or -1
    std::vector<int> fixed_index_;  // vertex -> constrained slot or -1
    std::vector<int> free_vertices_;
    ColMatrix kff_;
    ColMatrix kfc_;
    Eigen::VectorXd load_;
    mutable std::shared_ptr<Eigen::SimplicialLDLT<ColMatrix>> ldlt_;
    struct Iterative;
    std::shared_ptr<Iterative> iterative_;
    mutable bool analyzed_ = false;

    void factorize_direct() const;
};

/// One-shot solve of `system` with prescribed boundary values.
FeFunction solve_dirichlet(const SparseSystem& system, const Eigen::VectorXd& boundary_values,
                           const SolverOptions& options = {});

/// Boundary values sampled from a function of the polar angle at the boundary vertices.
Eigen::VectorXd boundary_data(const TriMesh& mesh, const std::function<double(double theta)>& f);

struct Norms {
    double l2 = 0.0;
    double h1_semi = 0.0;
    double h1 = 0.0;
};

/// Exact P1 norms, optionally restricted to triangles whose centroid satisfies `region`.
Norms norms(const FeFunction& u, const std::function<bool(const Vec2&)>* region = nullptr);

/// Norms of u − exact with a degree-5 rule per element.
Norms error_norms(const FeFunction& u, const std::function<double(const Vec2&)>& exact,
                  const std::function<Vec2(const Vec2&)>& exact_gradient);

/// max over free vertices |(K u − b)_i|, the discrete Galerkin residual.
double interior_residual(const SparseSystem& system, const Eigen::VectorXd& u);

}  // namespace cloaksim
