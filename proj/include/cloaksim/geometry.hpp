#pragma once

#include "cloaksim/coeff.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cloaksim {

using PointMap = std::function<Point(const Point&)>;
using JacobianFn = std::function<Tensor(const Point&)>;

/// Piecewise-smooth change of variables with analytic Jacobian of the forward map.
struct DiffMap {
    int dim = 2;
    PointMap forward;
    PointMap inverse;
    JacobianFn jacobian;
    /// Radii (in the source domain) where the map is only one-sided differentiable.
    std::vector<double> piece_boundaries;
    std::string name;
};

DiffMap identity_map(int dim);

/// x ↦ factor·x.
DiffMap dilation_map(int dim, double factor);

/// Regular blow-up F^r: B_r → B_1 by x/r, B_2∖B_r → B_2∖B_1 affinely in |x|, identity
/// outside B_2. Requires 0 < r < 1.
DiffMap regular_blowup(double r, int dim);

/// Singular blow-up F(x) = (1 + |x|/2)·x/|x| of the origin onto B_1; identity outside B_2.
/// forward(0) and inverse(|y| ≤ 1) throw PreconditionError.
DiffMap singular_map(int dim);

/// second ∘ first.
DiffMap compose(const DiffMap& first, const DiffMap& second);

/// Central-difference Jacobian of `map.forward`.
Tensor fd_jacobian(const DiffMap& map, const Point& x, double step = 1e-6);

struct MapCheck {
    int samples = 0;
    double max_inversion_error = 0.0;
    double max_jacobian_error = 0.0;
};

/// Samples points uniformly in the ball of `radius`, keeping a margin of 1e-4 from the
/// map's piece boundaries, and measures |inverse(forward(x)) − x| and |DΦ − DΦ_fd|.
MapCheck check_map(const DiffMap& map, int samples, std::uint64_t seed, double radius = 2.0);

/// Φ_*A(y,t) = DΦ A(x,t) DΦᵀ / |det DΦ| at x = Φ⁻¹(y).
///
/// Structure constants are estimated over a polar sample of the ball of `sample_radius`.
/// Evaluation throws NumericalError where det DΦ vanishes.
CoefficientField pushforward(const CoefficientField& a, const DiffMap& map,
                             double sample_radius = 2.0);

/// (F^r)⁻¹ pushed onto B_r: r^{−(N−2)}·A(x/r, t). Evaluation outside B_r throws.
CoefficientField transformed_inner_tensor(const CoefficientField& a, double r);

/// Closed form det DF = ½(½ + 1/|x|)^{N−1}.
double singular_jacobian_det(double x_radius, int dim);

struct EigenSplit {
    double radial = 0.0;
    double tangential = 0.0;
};

/// Eigenvalues of F_*1 at x = F⁻¹(y) with |x| = x_radius, from the closed form.
EigenSplit singular_cloak_eigenvalues(double x_radius, int dim);

/// Eigenvalues of F_*1·(DF)⁻¹; the radial one is the normal-flux factor that vanishes at the
/// cloak's inner boundary.
EigenSplit singular_flux_eigenvalues(double x_radius, int dim);

/// F_*1 on 1 < |y| < 2, built from the closed-form eigenvalues. Throws outside that annulus.
CoefficientField singular_cloak_tensor(int dim);

/// F_*1 for |y| ≥ rho, the tensor frozen at |y| = rho (rotated with ŷ) on 1 ≤ |y| < rho,
/// identity inside B_1 and outside B_2. Requires 1 < rho < 2.
CoefficientField truncated_singular_cloak(double rho, int dim);

}  // namespace cloaksim
