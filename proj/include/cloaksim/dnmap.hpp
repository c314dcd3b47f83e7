#pragma once

#include "cloaksim/qsolve.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace cloaksim {

/// {1, cos kθ, sin kθ : k = 1..K} sampled at the boundary vertices of a mesh.
struct FourierBasis {
    int max_mode = 0;
    /// Mode number k of each basis function.
    std::vector<int> modes;
    std::vector<std::string> labels;
    /// boundary vertex × basis function.
    Eigen::MatrixXd values;

    static FourierBasis on(const TriMesh& mesh, int max_mode);
    static FourierBasis abstract(int max_mode);

    std::size_t size() const { return modes.size(); }
    /// Discrete H^{1/2} weight (1+k²)^{1/2} of function j.
    double weight(std::size_t j) const;
    /// Boundary L² Gram matrix by the trapezoid rule along the boundary polygon.
    Eigen::MatrixXd gram(const TriMesh& mesh) const;
};

struct DtNOperator {
    FourierBasis basis;
    /// pairing(i, j) = ⟨Λ(a·f_j), f_i⟩ at amplitude a.
    Eigen::MatrixXd pairing;
    std::string coefficient;
    bool nonlinear = false;
    double amplitude = 1.0;
    std::vector<bool> converged;
    std::vector<int> iterations;

    bool all_converged() const;
};

struct DnOptions {
    PicardConfig picard;
    double amplitude = 1.0;
    /// Column-level workers.
    int threads = 1;
};

/// Solves one quasi-linear problem per basis function and pairs the flux with every basis
/// function. Columns are independent; a t-independent field shares one factorization.
DtNOperator dn_operator(const CoefficientField& a, const FourierBasis& basis, const Assembler& assembler,
                        const DnOptions& options = {});

/// Largest singular value of W^{−1/2}(M₁ − M₂)W^{−1/2}, W = diag((1+k²)^{1/2}).
double dn_difference(const DtNOperator& op1, const DtNOperator& op2);

/// Weighted difference ‖W^{−1/2}(M₁ − M₂)_{·,j}‖ for a single probe column j.
double dn_column_difference(const DtNOperator& op1, const DtNOperator& op2, std::size_t column);

/// H^{1/2}-weighted Fourier norm (modes 0..max_mode) of the difference of the discrete conormal
/// fluxes of u1 and u2 on the outer boundary. Fluxes are computed variationally from the
/// triangles with centroid radius ≥ band_inner, where both coefficients must be the identity.
double neumann_trace_error(const FeFunction& u1, const FeFunction& u2, const CoefficientField& a1,
                           const CoefficientField& a2, double band_inner, int max_mode = 8);

/// JSON {"basis": K, "matrix": [row-major], "converged": [...], ...}.
void write_operator(std::ostream& out, const DtNOperator& op);
DtNOperator read_operator(std::istream& in);
void save_operator(const std::string& path, const DtNOperator& op);
DtNOperator load_operator(const std::string& path);

}  // namespace cloaksim
