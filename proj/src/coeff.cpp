#include "cloaksim/coeff.hpp"

#include "cloaksim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cloaksim {

void StructureConstants::check() const {
    if (!(alpha > 0.0) || !(beta >= alpha) || !std::isfinite(beta) || !(lipschitz_l >= 0.0)) {
        std::ostringstream msg;
        msg << "invalid structure constants: alpha=" << alpha << " beta=" << beta
            << " L=" << lipschitz_l;
        throw PreconditionError(msg.str());
    }
}

StructureConstants combine(const StructureConstants& a, const StructureConstants& b) {
    return {std::min(a.alpha, b.alpha), std::max(a.beta, b.beta),
            std::max(a.lipschitz_l, b.lipschitz_l)};
}

CoefficientField constant_field(const Tensor& value, std::string name) {
    Eigen::SelfAdjointEigenSolver<Tensor> eig(value);
    const auto& ev = eig.eigenvalues();
    CoefficientField f;
    f.dim = static_cast<int>(value.rows());
    f.eval = [value](const Point&, double) { return value; };
    f.constants = {ev.minCoeff(), ev.maxCoeff(), 0.0};
    f.name = std::move(name);
    f.state_dependent = false;
    return f;
}

CoefficientField identity_field(int dim) {
    return constant_field(identity_tensor(dim), "identity");
}

CoefficientField isotropic_field(int dim, ScalarFn scalar, StructureConstants constants,
                                 std::string name, bool state_dependent) {
    CoefficientField f;
    f.dim = dim;
    f.eval = [dim, s = std::move(scalar)](const Point& x, double t) {
        return Tensor(s(x, t) * identity_tensor(dim));
    };
    f.constants = constants;
    f.name = std::move(name);
    f.state_dependent = state_dependent;
    return f;
}

CoefficientField scaled_field(const CoefficientField& field, double factor) {
    if (!(factor > 0.0)) throw PreconditionError("scale factor must be positive");
    CoefficientField f = field;
    f.eval = [inner = field.eval, factor](const Point& x, double t) {
        return Tensor(factor * inner(x, t));
    };
    f.constants = {factor * field.constants.alpha, factor * field.constants.beta,
                   factor * field.constants.lipschitz_l};
    std::ostringstream name;
    name << factor << "*" << field.name;
    f.name = name.str();
    return f;
}

CoefficientField piecewise_field(const CoefficientField& inner, const CoefficientField& outer,
                                 Region region) {
    if (inner.dim != outer.dim) {
        throw PreconditionError("piecewise_field: dimension mismatch (" +
                                std::to_string(inner.dim) + " vs " +
                                std::to_string(outer.dim) + ")");
    }
    CoefficientField f;
    f.dim = inner.dim;
    f.eval = [a = inner.eval, b = outer.eval, in = std::move(region)](const Point& x, double t) {
        return in(x) ? a(x, t) : b(x, t);
    };
    f.constants = combine(inner.constants, outer.constants);
    f.name = inner.name + "|" + outer.name;
    f.state_dependent = inner.state_dependent || outer.state_dependent;
    return f;
}

Region ball_region(double radius, bool closed) {
    if (closed) return [radius](const Point& x) { return x.norm() <= radius; };
    return [radius](const Point& x) { return x.norm() < radius; };
}

namespace {

std::vector<Point> unit_directions(int dim, int count) {
    std::vector<Point> dirs;
    dirs.reserve(static_cast<std::size_t>(count));
    if (dim == 2) {
        for (int k = 0; k < count; ++k) {
            const double a = std::numbers::pi * k / count;
            dirs.push_back(make_point(std::cos(a), std::sin(a)));
        }
    } else {
        // Fibonacci points on the upper hemisphere; ±ξ give the same quadratic form.
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < count; ++k) {
            const double z = 1.0 - (k + 0.5) / count;
            const double rho = std::sqrt(1.0 - z * z);
            dirs.push_back(make_point(rho * std::cos(golden * k), rho * std::sin(golden * k), z));
        }
    }
    return dirs;
}

std::vector<double> state_grid(double t_min, double t_max, double dt) {
    std::vector<double> ts;
    const int n = static_cast<int>(std::floor((t_max - t_min) / dt + 1e-9));
    for (int i = 0; i <= n; ++i) ts.push_back(t_min + i * dt);
    return ts;
}

std::string describe(const Point& x, double t) {
    std::ostringstream s;
    s << "(x=(";
    for (Eigen::Index i = 0; i < x.size(); ++i) s << (i ? "," : "") << x[i];
    s << "), t=" << t << ")";
    return s.str();
}

}  // namespace

SamplingPlan SamplingPlan::lattice(int dim, double lo, double hi, int n, double t_min,
                                   double t_max, double dt, int n_dirs) {
    SamplingPlan plan;
    const auto coord = [&](int i) { return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1); };
    if (dim == 2) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) plan.points.push_back(make_point(coord(i), coord(j)));
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    plan.points.push_back(make_point(coord(i), coord(j), coord(k)));
    }
    plan.states = state_grid(t_min, t_max, dt);
    plan.directions = unit_directions(dim, n_dirs);
    return plan;
}

SamplingPlan SamplingPlan::disk(int dim, double radius, int n, double t_min, double t_max,
                                double dt, int n_dirs) {
    SamplingPlan plan = lattice(dim, -radius, radius, n, t_min, t_max, dt, n_dirs);
    std::erase_if(plan.points, [radius](const Point& p) { return p.norm() > radius; });
    return plan;
}

ValidationReport validate_structure(const CoefficientField& field, const SamplingPlan& plan) {
    if (plan.points.empty() || plan.states.empty() || plan.directions.empty()) {
        throw PreconditionError("validate_structure: empty sampling plan");
    }
    const auto& c = field.constants;
    ValidationReport rep;
    rep.min_rayleigh = std::numeric_limits<double>::infinity();

    std::vector<double> states = plan.states;
    std::sort(states.begin(), states.end());

    for (const Point& x : plan.points) {
        Tensor prev;
        for (std::size_t it = 0; it < states.size(); ++it) {
            const double t = states[it];
            Tensor a;
            try {
                a = field.eval(x, t);
            } catch (const std::exception& e) {
                throw NumericalError("coefficient '" + field.name + "' failed at " +
                                     describe(x, t) + ": " + e.what());
            }
            if (!a.allFinite()) {
                throw NumericalError("coefficient '" + field.name + "' non-finite at " +
                                     describe(x, t));
            }
            rep.max_asymmetry = std::max(rep.max_asymmetry, (a - a.transpose()).cwiseAbs().maxCoeff());
            for (const Point& xi : plan.directions) {
                const double q = xi.dot(a * xi);
                const double nrm = (a * xi).norm();
                if (q < rep.min_rayleigh) {
                    rep.min_rayleigh = q;
                    rep.worst_rayleigh = {x, t, q};
                }
                if (nrm > rep.max_operator_norm) {
                    rep.max_operator_norm = nrm;
                    rep.worst_norm = {x, t, nrm};
                }
            }
            if (it > 0) {
                const double ratio = (a - prev).cwiseAbs().maxCoeff() / (t - states[it - 1]);
                if (ratio > rep.max_lipschitz_ratio) {
                    rep.max_lipschitz_ratio = ratio;
                    rep.worst_lipschitz = {x, t, ratio};
                }
            }
            prev = std::move(a);
        }
    }

    const double tol = plan.rel_tol;
    if (rep.max_asymmetry > tol * std::max(1.0, rep.max_operator_norm)) {
        rep.failures.push_back("asymmetric at " + describe(rep.worst_norm.x, rep.worst_norm.t));
    }
    if (rep.min_rayleigh < c.alpha * (1.0 - tol)) {
        rep.failures.push_back("ellipticity " + std::to_string(rep.min_rayleigh) + " < alpha at " +
                               describe(rep.worst_rayleigh.x, rep.worst_rayleigh.t));
    }
    if (rep.max_operator_norm > c.beta * (1.0 + tol)) {
        rep.failures.push_back("bound " + std::to_string(rep.max_operator_norm) + " > beta at " +
                               describe(rep.worst_norm.x, rep.worst_norm.t));
    }
    if (rep.max_lipschitz_ratio > c.lipschitz_l * (1.0 + tol) + tol) {
        rep.failures.push_back("Lipschitz ratio " + std::to_string(rep.max_lipschitz_ratio) +
                               " > L at " +
                               describe(rep.worst_lipschitz.x, rep.worst_lipschitz.t));
    }
    rep.pass = rep.failures.empty();
    return rep;
}

}  // namespace cloaksim
