#pragma once

#include "cloaksim/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cloaksim {

/// Ellipticity, boundedness and Lipschitz-in-state constants of a coefficient class.
struct StructureConstants {
    double alpha = 1.0;
    double beta = 1.0;
    double lipschitz_l = 0.0;

    /// Throws PreconditionError unless 0 < alpha ≤ beta < ∞ and lipschitz_l ≥ 0.
    void check() const;
};

/// Componentwise (min α, max β, max L).
StructureConstants combine(const StructureConstants& a, const StructureConstants& b);

using TensorFn = std::function<Tensor(const Point& x, double t)>;
using ScalarFn = std::function<double(const Point& x, double t)>;
using Region = std::function<bool(const Point& x)>;

/// A quasi-linear symmetric tensor field A(x, t).
///
/// `eval` must be a pure function: it is called concurrently from assembly workers.
/// `state_dependent` is false when A does not depend on t; the quasi-linear solver
/// then knows the frozen-coefficient map is constant.
struct CoefficientField {
    int dim = 2;
    TensorFn eval;
    StructureConstants constants;
    std::string name;
    bool state_dependent = true;

    Tensor operator()(const Point& x, double t) const { return eval(x, t); }
};

CoefficientField constant_field(const Tensor& value, std::string name);
CoefficientField identity_field(int dim);

/// s(x,t)·I with caller-supplied structure constants.
CoefficientField isotropic_field(int dim, ScalarFn scalar, StructureConstants constants,
                                 std::string name, bool state_dependent = true);

/// Multiplies a field by a positive constant; constants scale accordingly.
CoefficientField scaled_field(const CoefficientField& field, double factor);

/// Returns `inner` on the region and `outer` elsewhere. Throws on dimension mismatch.
CoefficientField piecewise_field(const CoefficientField& inner, const CoefficientField& outer,
                                 Region region);

/// Open ball indicator |x| < radius (closed when `closed`).
Region ball_region(double radius, bool closed = false);

/// Finite sample sets over which structure membership is checked.
struct SamplingPlan {
    std::vector<Point> points;
    std::vector<double> states;
    std::vector<Point> directions;
    double rel_tol = 1e-12;

    /// n×n lattice on [lo, hi]^2 (dim 2) or n^3 lattice (dim 3), t from t_min to t_max in
    /// steps of dt, `n_dirs` unit directions.
    static SamplingPlan lattice(int dim, double lo, double hi, int n = 32, double t_min = -5.0,
                                double t_max = 5.0, double dt = 0.5, int n_dirs = 16);

    /// Same as `lattice` but keeps only points inside the ball of the given radius.
    static SamplingPlan disk(int dim, double radius, int n = 32, double t_min = -5.0,
                             double t_max = 5.0, double dt = 0.5, int n_dirs = 16);
};

struct Violation {
    Point x;
    double t = 0.0;
    double value = 0.0;
};

struct ValidationReport {
    bool pass = false;
    double min_rayleigh = 0.0;
    double max_operator_norm = 0.0;
    double max_lipschitz_ratio = 0.0;
    double max_asymmetry = 0.0;
    Violation worst_rayleigh;
    Violation worst_norm;
    Violation worst_lipschitz;
    std::vector<std::string> failures;
};

/// Sampling-based membership test for M(α, β, L). Lipschitz ratios are taken over
/// adjacent pairs of the sorted state grid, which bound all pairs.
/// Throws NumericalError naming (x, t) when evaluation throws or returns non-finite values.
ValidationReport validate_structure(const CoefficientField& field, const SamplingPlan& plan);

}  // namespace cloaksim
