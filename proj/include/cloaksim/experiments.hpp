#pragma once

#include "cloaksim/qsolve.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cloaksim {

enum class ExperimentKind { RegularCloak, TruncatedSingular, Homogenization, DiffeoInvariance };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::RegularCloak;
    /// r values, rho values, n values or mesh sizes h, depending on the kind.
    std::vector<double> schedule;
    double h = 0.05;
    int modes = 8;
    PicardConfig picard;
    /// Inclusion key (see make_inclusion) hidden by the cloak.
    std::string inclusion = "5I";
    std::string output;
    /// Sweep points solved concurrently.
    int threads = 1;
    /// Recorded only; every sweep is deterministic.
    std::uint64_t seed = 0;
    /// Also compute the full DN operators (regular sweep).
    bool compute_dn = true;

    /// Regular sweep: angular mesh size min(h, max(h_min, grading·ρ)) near the inclusion.
    double grading = 0.25;
    /// Truncated sweep: elements across the frozen layer 1 < |x| < rho.
    int layer_elements = 40;
    /// Truncated sweep: also report the uncloaked inclusion on the first mesh.
    bool plain_reference = false;

    /// Homogenization sweep.
    double big_r = 1.5;
    double eta = 0.1;
    int big_m = 8;
    double psi = 1.0;
    double eps1 = 0.1;
    int elements_per_period = 32;
    int quad_levels = 2;
    double outer_radius = 3.0;

    /// Diffeomorphism check: coefficient preset and map key.
    std::string coefficient = "identity";
    std::string map = "regular:0.5";

    /// Throws PreconditionError unless the schedule is nonempty and strictly monotone and the
    /// remaining fields are in range.
    void check() const;
};

struct DecayRow {
    double parameter = 0.0;
    /// Abscissa of the log-log fits (r, rho − 1, ε_n or h).
    double scale = 0.0;
    double h = 0.0;
    long vertices = 0;
    double h1_error = 0.0;
    double l2_error = 0.0;
    double dn_difference = 0.0;
    double neumann_error = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string note;
};

struct SlopeFit {
    std::string quantity;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    /// RMS of the log residuals.
    double residual = 0.0;
    int points = 0;
    int excluded = 0;
    /// Set when R² < 0.9 or fewer than 4 points were usable; `note` says which.
    bool flagged = false;
    std::string note;
};

struct DecayReport {
    std::string experiment;
    std::string parameter;
    std::string scale;
    std::vector<DecayRow> rows;
    std::vector<SlopeFit> fits;
    std::map<std::string, double> summary;
    std::vector<std::string> notes;

    /// Values of one column ("h1_error", "l2_error", "dn_difference", "neumann_error").
    std::vector<double> column(const std::string& quantity) const;
};

bool operator==(const DecayRow& a, const DecayRow& b);
bool operator==(const SlopeFit& a, const SlopeFit& b);
bool operator==(const DecayReport& a, const DecayReport& b);

/// Least squares of log y against log x over the points where both are positive and finite.
/// Needs at least 4 points; otherwise the fit is returned flagged with a NaN slope.
SlopeFit fit_slope(const std::string& quantity, const std::vector<double>& x,
                   const std::vector<double>& y, const std::vector<bool>& use = {});

/// Largest relative increase max_i (v[i+1] − v[i]) / v[i]; ≤ 0 for a non-increasing sequence,
/// NaN for fewer than two values.
double worst_increase(const std::vector<double>& values);

/// Transformed regular cloak Ã^r in B_r, identity outside; errors against the identity
/// solution for f = cos θ, DN difference against Λ₁.
DecayReport run_regular_cloak_sweep(const ExperimentConfig& cfg);
/// Truncated singular cloak around the inclusion; DN difference against Λ₁.
DecayReport run_truncated_singular_sweep(const ExperimentConfig& cfg);
/// Microstructured isotropic cloaks with ε_n = ε₁·2^{−(n−1)} on B₃ against the anisotropic
/// homogenized target.
DecayReport run_homogenization_sweep(const ExperimentConfig& cfg);
/// DN operators of A and Φ_*A on the same meshes over a sequence of mesh sizes.
DecayReport run_diffeo_invariance(const ExperimentConfig& cfg);

DecayReport run_experiment(const ExperimentConfig& cfg);

}  // namespace cloaksim
