#pragma once

#include "cloaksim/coeff.hpp"
#include "cloaksim/fem.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cloaksim {

/// C¹ ramp: 0 for t < 0, ½t² on [0,1), 1 − ½(2−t)² on [1,2), 1 for t ≥ 2.
double phi(double t);

/// Plateau bump: ramps up on [0,2], equals 1 on [2, M−2], ramps down to 0 at M.
/// Throws PreconditionError for M < 4.
double phi_m(double t, int m);

/// 1-periodic microstructure profiles ζ₁(t) = φ_M(2Mt), ζ₂(t) = φ_M(2M(t − ½)) on [0,1).
double zeta(int j, double t, int m);

/// Points of [0,1] where ζ₁ or ζ₂ change formula (sorted, including 0 and 1).
std::vector<double> zeta_breakpoints(int m);

/// ∫_a^b f by adaptive Gauss–Kronrod, split at the given interior breakpoints.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const std::vector<double>& breakpoints = {}, double abs_tol = 1e-12);

/// A*(x,t) evaluated pointwise, optionally backed by an interpolation cache.
struct HomogenizedTensor {
    int dim = 2;
    std::function<Tensor(const Point& x, double t)> eval;
    /// "closed-form-laminate", "cell-solve" or "cached:<source>".
    std::string provenance;

    Tensor operator()(const Point& x, double t) const { return eval(x, t); }
    CoefficientField as_field(const StructureConstants& constants, const std::string& name,
                              bool state_dependent = true) const;
};

using RadialProfile = std::function<double(const Point& x, double r_prime, double t)>;

struct RadialMeans {
    double harmonic = 0.0;
    double arithmetic = 0.0;
};

/// Harmonic and arithmetic means over r′ ∈ [0,1] of a 1-periodic profile at (x, t).
/// Throws NumericalError with the location when the profile is not positive.
RadialMeans radial_means(const RadialProfile& profile, const Point& x, double t,
                         const std::vector<double>& breakpoints = {});

/// σ̲Π + σ̄(I − Π), Π the radial projector at x. At x = 0 the tensor is σ̄·I.
HomogenizedTensor radial_homogenized(RadialProfile profile, int dim = 2,
                                     std::vector<double> breakpoints = {});

/// Periodic cell problem on Y = [0,1)², with the coefficient frozen at some (x, t).
struct CellProblem {
    std::function<Mat2(const Vec2& y)> a_cell;
    /// Grid cells per direction; each grid cell is split into 4 triangles around its center.
    int n1 = 64;
    int n2 = 64;
    /// Quadrature subdivision level (0: interior 3-point rule).
    int quad_levels = 0;
};

struct CellSolution {
    Mat2 a_star = Mat2::Zero();
    /// Corrector values: grid nodes (i + n1·j) then cell centers (n1·n2 + i + n1·j).
    std::array<Eigen::VectorXd, 2> correctors;
    int n1 = 0;
    int n2 = 0;
    /// max_k |∫_Y χ_k|.
    double mean_residual = 0.0;
    /// Quadrature-consistent harmonic and arithmetic means of the trace of the cell
    /// coefficient over dim (isotropic cells: the bounds on A*).
    double reuss = 0.0;
    double voigt = 0.0;

    /// H¹(Y) norm of a corrector difference.
    static double corrector_distance(const CellSolution& a, const CellSolution& b, int k);
};

/// P1 solve of −div_y(A(e_k + ∇χ_k)) = 0 with χ_k periodic and of zero mean;
/// A*_kl = ∫_Y A(e_k + ∇χ_k)·(e_l + ∇χ_l). Throws NumericalError when the cell coefficient is
/// not SPD or the constrained system is singular.
CellSolution solve_cell(const CellProblem& problem);

/// HomogenizedTensor whose values come from a cell solve per evaluation.
HomogenizedTensor cell_homogenized(std::function<CellProblem(const Point& x, double t)> factory);

/// Isotropic tensors of a radial field interpolated bilinearly in (|x|, t) from a lattice of
/// radial/tangential eigenvalues; t is clamped to [t_min, t_max].
struct RadialTensorCache {
    double r_max = 2.0;
    double dr = 0.02;
    double t_min = 0.0;
    double t_max = 0.0;
    double dt = 0.1;
    int nr = 0;
    int nt = 0;
    std::vector<double> radial;
    std::vector<double> tangential;
    std::string source;

    static RadialTensorCache build(const HomogenizedTensor& tensor, double r_max, double t_min,
                                   double t_max, double dr = 0.02, double dt = 0.1, int threads = 1);
    std::array<double, 2> eigenvalues(double r, double t) const;
    HomogenizedTensor tensor() const;
};

struct LipschitzReport {
    double max_ratio = 0.0;
    /// max ‖χ_k(t₁) − χ_k(t₂)‖_{H¹(Y)} / |t₁ − t₂|, cell-solve provenance only.
    double max_corrector_ratio = 0.0;
    bool has_correctors = false;
};

/// max |a*_ij(x,t₁) − a*_ij(x,t₂)| / |t₁ − t₂| over adjacent pairs of the sorted t-grid.
LipschitzReport lipschitz_in_t(const HomogenizedTensor& tensor, const std::vector<Point>& points,
                               std::vector<double> t_grid);

/// Same through explicit cell solves, also reporting corrector differences.
LipschitzReport lipschitz_in_t(const std::function<CellProblem(double t)>& factory,
                               std::vector<double> t_grid);

struct CloakTargets {
    double harmonic = 1.0;
    double arithmetic = 1.0;
};

/// Harmonic and arithmetic mean targets of the radial isotropic cloak at radius r.
CloakTargets cloak_targets(double big_r, double eta, double psi, double r);

struct AmplitudeFit {
    double a1 = 0.0;
    double a2 = 0.0;
    /// |1/∫σ⁻¹ − h| and |∫σ − m| at the solution.
    double residual_harmonic = 0.0;
    double residual_arithmetic = 0.0;
    int iterations = 0;

    double residual() const { return std::max(residual_harmonic, residual_arithmetic); }
};

/// Solves ∫₀¹σ⁻¹ = 1/h and ∫₀¹σ = m for σ = [1 + a¹ζ₁ − a²ζ₂]² with a¹ ∈ [0, a_max],
/// a² ∈ [0, 1), by damped Newton from the large-M starting point.
/// Throws PreconditionError if not 0 < h ≤ m, NumericalError if no solution is found.
AmplitudeFit fit_cloak_amplitudes(double h, double m, int big_m, double a_max = 10.0,
                                  double tol = 1e-12);

/// (1 + a¹ζ₁(r′) − a²ζ₂(r′))².
double cloak_profile(double a1, double a2, double r_prime, int big_m);

struct RadialCloakSpec {
    double big_r = 1.5;
    double eta = 0.1;
    int big_m = 8;
    double eps = 0.05;
    double psi = 1.0;
    /// Spacing of the radius lattice on which amplitudes are fitted.
    double lattice_step = 0.002;

    void check() const;
};

/// Radial isotropic cloak σ(x) = [1 + a¹(|x|)ζ₁(|x|/ε) − a²(|x|)ζ₂(|x|/ε)]² on B₂, 1 outside,
/// with amplitudes fitted on a radius lattice and interpolated linearly.
class IsotropicCloak {
public:
    explicit IsotropicCloak(RadialCloakSpec spec);

    const RadialCloakSpec& spec() const { return spec_; }
    std::array<double, 2> amplitudes(double r) const;
    double sigma(double r) const;
    /// Largest fit residual over the lattice.
    double max_fit_residual() const { return max_residual_; }
    const std::vector<double>& lattice() const { return radii_; }
    const std::vector<AmplitudeFit>& fits() const { return fits_; }
    /// Inner radius R − 2η below which the fitted amplitudes vanish.
    double core_radius() const;

    /// Isotropic microstructured field; `inclusion` replaces it on |x| < core_radius().
    CoefficientField field(const std::optional<CoefficientField>& inclusion = std::nullopt) const;
    /// Homogenized target h(r)Π + m(r)(I − Π) on core_radius() ≤ |x| ≤ 2, identity beyond,
    /// inclusion (or identity) inside.
    CoefficientField target(const std::optional<CoefficientField>& inclusion = std::nullopt) const;

private:
    RadialCloakSpec spec_;
    std::vector<double> radii_;
    std::vector<AmplitudeFit> fits_;
    double max_residual_ = 0.0;
    double sigma_min_ = 1.0;
    double sigma_max_ = 1.0;
};

/// One cloak per (R_n, η_n, ε_n). Throws PreconditionError on length mismatch or empty input.
std::vector<IsotropicCloak> build_isotropic_cloak_sequence(const std::vector<double>& big_r,
                                                           const std::vector<double>& eta,
                                                           const std::vector<double>& eps,
                                                           int big_m = 8, double psi = 1.0);

}  // namespace cloaksim
