#include "cloaksim/experiments.hpp"

#include "cloaksim/dnmap.hpp"
#include "cloaksim/errors.hpp"
#include "cloaksim/geometry.hpp"
#include "cloaksim/homog.hpp"
#include "cloaksim/parallel.hpp"
#include "cloaksim/presets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace cloaksim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Inner radius of the boundary band used for Neumann traces in the regular sweep.
constexpr double kTraceBand = 1.5;

std::size_t cos1_column(const FourierBasis& basis) {
    for (std::size_t j = 0; j < basis.size(); ++j)
        if (basis.modes[j] == 1 && basis.labels[j].rfind("cos", 0) == 0) return j;
    throw PreconditionError("Fourier basis needs at least one mode");
}

bool strictly_monotone(const std::vector<double>& s) {
    bool up = true, down = true;
    for (std::size_t i = 1; i < s.size(); ++i) {
        up = up && s[i] > s[i - 1];
        down = down && s[i] < s[i - 1];
    }
    return up || down;
}

int max_iterations(const DtNOperator& op) {
    int it = 0;
    for (int i : op.iterations) it = std::max(it, i);
    return it;
}

Eigen::VectorXd cos_data(const TriMesh& mesh) {
    return boundary_data(mesh, [](double th) { return std::cos(th); });
}

void add_fits(DecayReport& report, const std::vector<std::string>& quantities) {
    std::vector<double> x;
    std::vector<bool> use;
    for (const auto& r : report.rows) {
        x.push_back(r.scale);
        use.push_back(r.converged);
    }
    for (const auto& q : quantities) {
        auto fit = fit_slope(q, x, report.column(q), use);
        report.fits.push_back(fit);
    }
}

// Runs one point per schedule entry; a NumericalError becomes a non-converged row.
template <class Body>
std::vector<DecayRow> run_points(const ExperimentConfig& cfg, Body&& body) {
    std::vector<DecayRow> rows(cfg.schedule.size());
    parallel_for(cfg.schedule.size(), cfg.threads, [&](std::size_t i) {
        DecayRow& row = rows[i];
        row.parameter = cfg.schedule[i];
        row.h1_error = row.l2_error = row.dn_difference = row.neumann_error = kNaN;
        try {
            body(i, row);
        } catch (const NumericalError& e) {
            row.converged = false;
            row.note = e.what();
        }
    });
    return rows;
}

DnOptions dn_options(const ExperimentConfig& cfg) {
    DnOptions o;
    o.picard = cfg.picard;
    o.threads = 1;
    return o;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::RegularCloak: return "regular-cloak";
    case ExperimentKind::TruncatedSingular: return "truncated-singular";
    case ExperimentKind::Homogenization: return "homogenization";
    case ExperimentKind::DiffeoInvariance: return "diffeo-invariance";
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
    for (auto k : {ExperimentKind::RegularCloak, ExperimentKind::TruncatedSingular,
                   ExperimentKind::Homogenization, ExperimentKind::DiffeoInvariance})
        if (to_string(k) == text) return k;
    throw PreconditionError("unknown experiment '" + text + "'");
}

void ExperimentConfig::check() const {
    if (schedule.empty()) throw PreconditionError("empty parameter schedule");
    if (!strictly_monotone(schedule)) throw PreconditionError("parameter schedule must be strictly monotone");
    if (!(h > 0.0)) throw PreconditionError("mesh size must be positive");
    if (modes < 1) throw PreconditionError("need at least one Fourier mode");
    if (threads < 0) throw PreconditionError("threads must be >= 0");
    picard.check();
    const double lo = *std::min_element(schedule.begin(), schedule.end());
    const double hi = *std::max_element(schedule.begin(), schedule.end());
    switch (kind) {
    case ExperimentKind::RegularCloak: {
        if (!(lo > 0.0) || !(hi < 1.0)) throw PreconditionError("r schedule must lie in (0, 1)");
        const double local = grading > 0.0 ? std::min(h, grading * lo) : h;
        if (2.0 * lo / local < 8.0) {
            std::ostringstream msg;
            msg << "mesh size " << local << " puts fewer than 8 elements across B_r, r = " << lo;
            throw PreconditionError(msg.str());
        }
        break;
    }
    case ExperimentKind::TruncatedSingular:
        if (!(lo > 1.0) || !(hi < 2.0)) throw PreconditionError("rho schedule must lie in (1, 2)");
        if (layer_elements < 8) throw PreconditionError("need at least 8 elements across the frozen layer");
        break;
    case ExperimentKind::Homogenization:
        for (double n : schedule)
            if (!(n >= 1.0) || n != std::floor(n)) throw PreconditionError("n schedule must hold integers >= 1");
        if (!(eps1 > 0.0)) throw PreconditionError("eps1 must be positive");
        if (!(outer_radius > 2.0)) throw PreconditionError("homogenization domain must contain B2");
        if (quad_levels < 0) throw PreconditionError("quad_levels must be >= 0");
        break;
    case ExperimentKind::DiffeoInvariance:
        if (!(lo > 0.0)) throw PreconditionError("mesh sizes must be positive");
        break;
    }
}

std::vector<double> DecayReport::column(const std::string& quantity) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (quantity == "h1_error") out.push_back(r.h1_error);
        else if (quantity == "l2_error") out.push_back(r.l2_error);
        else if (quantity == "dn_difference") out.push_back(r.dn_difference);
        else if (quantity == "neumann_error") out.push_back(r.neumann_error);
        else throw PreconditionError("unknown report column '" + quantity + "'");
    }
    return out;
}

namespace {
bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }
}  // namespace

bool operator==(const DecayRow& a, const DecayRow& b) {
    return same(a.parameter, b.parameter) && same(a.scale, b.scale) && same(a.h, b.h) &&
           a.vertices == b.vertices && same(a.h1_error, b.h1_error) && same(a.l2_error, b.l2_error) &&
           same(a.dn_difference, b.dn_difference) && same(a.neumann_error, b.neumann_error) &&
           a.iterations == b.iterations && a.converged == b.converged && a.note == b.note;
}

bool operator==(const SlopeFit& a, const SlopeFit& b) {
    return a.quantity == b.quantity && same(a.slope, b.slope) && same(a.intercept, b.intercept) &&
           same(a.r_squared, b.r_squared) && same(a.residual, b.residual) && a.points == b.points &&
           a.excluded == b.excluded && a.flagged == b.flagged && a.note == b.note;
}

bool operator==(const DecayReport& a, const DecayReport& b) {
    if (a.summary.size() != b.summary.size()) return false;
    for (auto ia = a.summary.begin(), ib = b.summary.begin(); ia != a.summary.end(); ++ia, ++ib)
        if (ia->first != ib->first || !same(ia->second, ib->second)) return false;
    return a.experiment == b.experiment && a.parameter == b.parameter && a.scale == b.scale &&
           a.rows == b.rows && a.fits == b.fits && a.notes == b.notes;
}

SlopeFit fit_slope(const std::string& quantity, const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<bool>& use) {
    if (x.size() != y.size() || (!use.empty() && use.size() != x.size()))
        throw PreconditionError("fit_slope: length mismatch");
    SlopeFit fit;
    fit.quantity = quantity;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool ok = (use.empty() || use[i]) && x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) &&
                        std::isfinite(y[i]);
        if (!ok) {
            ++fit.excluded;
            continue;
        }
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    fit.points = static_cast<int>(lx.size());
    std::vector<std::string> notes;
    if (fit.excluded > 0)
        notes.push_back(std::to_string(fit.excluded) + " point(s) excluded (non-converged or non-positive)");
    auto join = [&] {
        std::string s;
        for (const auto& n : notes) s += (s.empty() ? "" : "; ") + n;
        return s;
    };
    if (fit.points < 4) {
        fit.slope = fit.intercept = fit.r_squared = fit.residual = kNaN;
        fit.flagged = true;
        notes.push_back("fewer than 4 usable points");
        fit.note = join();
        return fit;
    }
    const double n = fit.points;
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < fit.points; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < fit.points; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw PreconditionError("fit_slope: abscissae are all equal");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (int i = 0; i < fit.points; ++i) {
        const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / n);
    fit.r_squared = syy > 0.0 ? 1.0 - ss / syy : 1.0;
    if (fit.r_squared < 0.9) {
        fit.flagged = true;
        notes.push_back("R^2 below 0.9");
    }
    fit.note = join();
    return fit;
}

double worst_increase(const std::vector<double>& values) {
    if (values.size() < 2) return kNaN;
    double worst = -INFINITY;
    for (std::size_t i = 1; i < values.size(); ++i) worst = std::max(worst, (values[i] - values[i - 1]) / values[i - 1]);
    return worst;
}

DecayReport run_regular_cloak_sweep(const ExperimentConfig& cfg) {
    cfg.check();
    const CoefficientField inclusion = make_inclusion(cfg.inclusion);
    const CoefficientField id = identity_field(2);

    // Meshes first, so an unresolvable radius fails before any solve.
    std::vector<MeshPtr> meshes;
    for (double r : cfg.schedule) {
        DiskMeshOptions o;
        o.grading = cfg.grading;
        meshes.push_back(std::make_shared<const TriMesh>(build_disk_mesh(2.0, {r}, cfg.h, o)));
    }

    DecayReport report;
    report.experiment = to_string(cfg.kind);
    report.parameter = "r";
    report.scale = "r";
    report.rows = run_points(cfg, [&](std::size_t i, DecayRow& row) {
        const double r = cfg.schedule[i];
        const MeshPtr& mesh = meshes[i];
        row.scale = r;
        row.h = mesh->h_max;
        row.vertices = static_cast<long>(mesh->vertex_count());
        const Assembler as(mesh);
        const auto a = piecewise_field(transformed_inner_tensor(inclusion, r), id, ball_region(r));
        const Eigen::VectorXd f = cos_data(*mesh);
        const auto u = solve_quasilinear(as, a, f, cfg.picard);
        const auto v = solve_quasilinear(as, id, f, cfg.picard);
        const Norms d = norms(FeFunction(mesh, u.u.values - v.u.values));
        row.h1_error = d.h1;
        row.l2_error = d.l2;
        row.neumann_error = neumann_trace_error(u.u, v.u, a, id, kTraceBand, cfg.modes);
        row.iterations = u.iterations;
        row.converged = u.converged;
        if (cfg.compute_dn) {
            const auto basis = FourierBasis::on(*mesh, cfg.modes);
            const auto op = dn_operator(a, basis, as, dn_options(cfg));
            const auto op0 = dn_operator(id, basis, as, dn_options(cfg));
            row.dn_difference = dn_difference(op, op0);
            row.iterations = std::max(row.iterations, max_iterations(op));
            row.converged = row.converged && op.all_converged();
        }
    });
    add_fits(report, {"h1_error", "l2_error", "dn_difference", "neumann_error"});
    return report;
}

DecayReport run_truncated_singular_sweep(const ExperimentConfig& cfg) {
    cfg.check();
    const CoefficientField inclusion = make_inclusion(cfg.inclusion);
    const CoefficientField id = identity_field(2);

    auto mesh_for = [&](double rho) {
        DiskMeshOptions o;
        o.bands.push_back({1.0, rho, (rho - 1.0) / cfg.layer_elements});
        return std::make_shared<const TriMesh>(build_disk_mesh(2.0, {1.0, rho}, cfg.h, o));
    };

    DecayReport report;
    report.experiment = to_string(cfg.kind);
    report.parameter = "rho";
    report.scale = "rho-1";
    report.rows = run_points(cfg, [&](std::size_t i, DecayRow& row) {
        const double rho = cfg.schedule[i];
        const MeshPtr mesh = mesh_for(rho);
        row.scale = rho - 1.0;
        row.h = mesh->h_max;
        row.vertices = static_cast<long>(mesh->vertex_count());
        const Assembler as(mesh);
        const auto basis = FourierBasis::on(*mesh, cfg.modes);
        const auto a = piecewise_field(inclusion, truncated_singular_cloak(rho, 2), ball_region(1.0));
        const auto op = dn_operator(a, basis, as, dn_options(cfg));
        const auto op0 = dn_operator(id, basis, as, dn_options(cfg));
        row.dn_difference = dn_difference(op, op0);
        // The cloak is not the identity up to ∂B₂, so the Neumann trace error of f = cos θ is
        // read off the operator column.
        row.neumann_error = dn_column_difference(op, op0, cos1_column(basis));
        row.iterations = max_iterations(op);
        row.converged = op.all_converged();
    });
    if (cfg.plain_reference) {
        const MeshPtr mesh = mesh_for(cfg.schedule.front());
        const Assembler as(mesh);
        const auto basis = FourierBasis::on(*mesh, cfg.modes);
        const auto plain = dn_operator(piecewise_field(inclusion, id, ball_region(1.0)), basis, as, dn_options(cfg));
        const auto op0 = dn_operator(id, basis, as, dn_options(cfg));
        report.summary["plain_dn_difference"] = dn_difference(plain, op0);
    }
    report.summary["worst_increase"] = worst_increase(report.column("dn_difference"));
    add_fits(report, {"dn_difference"});
    return report;
}

DecayReport run_homogenization_sweep(const ExperimentConfig& cfg) {
    cfg.check();
    std::optional<CoefficientField> inclusion;
    if (cfg.inclusion != "identity") inclusion = make_inclusion(cfg.inclusion);

    DecayReport report;
    report.experiment = to_string(cfg.kind);
    report.parameter = "n";
    report.scale = "eps";
    std::vector<double> fit_residuals(cfg.schedule.size(), kNaN);
    report.rows = run_points(cfg, [&](std::size_t i, DecayRow& row) {
        const double n = cfg.schedule[i];
        RadialCloakSpec spec;
        spec.big_r = cfg.big_r;
        spec.eta = cfg.eta;
        spec.big_m = cfg.big_m;
        spec.psi = cfg.psi;
        spec.eps = cfg.eps1 * std::pow(2.0, -(n - 1.0));
        row.scale = spec.eps;
        if (cfg.elements_per_period < 8) {
            row.note = "refused: fewer than 8 elements per period";
            return;
        }
        const IsotropicCloak cloak(spec);
        fit_residuals[i] = cloak.max_fit_residual();

        DiskMeshOptions o;
        o.bands.push_back({cloak.core_radius(), 2.0, spec.eps / cfg.elements_per_period});
        const auto mesh = std::make_shared<const TriMesh>(
            build_disk_mesh(cfg.outer_radius, {cloak.core_radius(), spec.big_r, 2.0}, cfg.h, o));
        row.h = mesh->h_max;
        row.vertices = static_cast<long>(mesh->vertex_count());
        AssemblyOptions ao;
        ao.quadrature = Quadrature::refined(cfg.quad_levels);
        const Assembler as(mesh, ao);

        const auto field = cloak.field(inclusion);
        const auto target = cloak.target(inclusion);
        const Eigen::VectorXd f = cos_data(*mesh);
        const auto un = solve_quasilinear(as, field, f, cfg.picard);
        const auto ut = solve_quasilinear(as, target, f, cfg.picard);
        const Norms d = norms(FeFunction(mesh, un.u.values - ut.u.values));
        row.l2_error = d.l2;
        row.h1_error = d.h1;

        const auto basis = FourierBasis::on(*mesh, cfg.modes);
        const auto opn = dn_operator(field, basis, as, dn_options(cfg));
        const auto opt = dn_operator(target, basis, as, dn_options(cfg));
        row.dn_difference = dn_difference(opn, opt);
        row.neumann_error = dn_column_difference(opn, opt, cos1_column(basis));
        row.iterations = std::max({un.iterations, max_iterations(opn)});
        row.converged = un.converged && ut.converged && opn.all_converged() && opt.all_converged();
    });
    double worst_fit = 0.0;
    for (double r : fit_residuals)
        if (std::isfinite(r)) worst_fit = std::max(worst_fit, r);
    report.summary["max_fit_residual"] = worst_fit;
    report.summary["l2_worst_increase"] = worst_increase(report.column("l2_error"));
    report.summary["dn_worst_increase"] = worst_increase(report.column("dn_difference"));
    add_fits(report, {"l2_error", "dn_difference", "neumann_error"});
    return report;
}

DecayReport run_diffeo_invariance(const ExperimentConfig& cfg) {
    cfg.check();
    const CoefficientField a = make_preset(cfg.coefficient, cfg.inclusion);
    const DiffMap map = make_map(cfg.map);
    const CoefficientField pa = pushforward(a, map, 2.0);

    // Align the images of the map's kinks so both coefficients are smooth on every element.
    std::vector<double> aligned;
    for (double rho : map.piece_boundaries) {
        const double y = map.forward(make_point(rho, 0.0)).norm();
        if (y > 1e-9 && y < 2.0 - 1e-9) aligned.push_back(y);
    }
    std::sort(aligned.begin(), aligned.end());
    aligned.erase(std::unique(aligned.begin(), aligned.end(),
                              [](double p, double q) { return std::abs(p - q) < 1e-12; }),
                  aligned.end());

    DecayReport report;
    report.experiment = to_string(cfg.kind);
    report.parameter = "h";
    report.scale = "h";
    std::vector<DtNOperator> reference(cfg.schedule.size());
    report.rows = run_points(cfg, [&](std::size_t i, DecayRow& row) {
        const double h = cfg.schedule[i];
        const auto mesh = std::make_shared<const TriMesh>(build_disk_mesh(2.0, aligned, h));
        row.scale = h;
        row.h = mesh->h_max;
        row.vertices = static_cast<long>(mesh->vertex_count());
        const Assembler as(mesh);
        const auto basis = FourierBasis::on(*mesh, cfg.modes);
        const auto op = dn_operator(a, basis, as, dn_options(cfg));
        const auto opp = dn_operator(pa, basis, as, dn_options(cfg));
        row.dn_difference = dn_difference(op, opp);
        row.neumann_error = dn_column_difference(op, opp, cos1_column(basis));
        row.iterations = std::max(max_iterations(op), max_iterations(opp));
        row.converged = op.all_converged() && opp.all_converged();
        reference[i] = op;
    });

    const auto d = report.column("dn_difference");
    const std::size_t n = d.size();
    if (n >= 2) {
        report.summary["self_convergence"] = dn_difference(reference[n - 1], reference[n - 2]);
        double ratio = INFINITY;
        for (std::size_t i = 1; i < n; ++i) ratio = std::min(ratio, d[i - 1] / d[i]);
        report.summary["min_refinement_ratio"] = ratio;
    }
    if (n >= 3) {
        // Richardson with the observed ratio of successive differences.
        const double q = (d[n - 3] - d[n - 2]) / (d[n - 2] - d[n - 1]);
        report.summary["extrapolated"] = q > 1.0 ? d[n - 1] - (d[n - 2] - d[n - 1]) / (q - 1.0) : kNaN;
    }
    add_fits(report, {"dn_difference"});
    return report;
}

DecayReport run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
    case ExperimentKind::RegularCloak: return run_regular_cloak_sweep(cfg);
    case ExperimentKind::TruncatedSingular: return run_truncated_singular_sweep(cfg);
    case ExperimentKind::Homogenization: return run_homogenization_sweep(cfg);
    case ExperimentKind::DiffeoInvariance: return run_diffeo_invariance(cfg);
    }
    throw PreconditionError("unknown experiment kind");
}

}  // namespace cloaksim
