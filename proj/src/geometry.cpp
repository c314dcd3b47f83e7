#include "cloaksim/geometry.hpp"

#include "cloaksim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace cloaksim {

namespace {

void check_dim(int dim) {
    if (dim != 2 && dim != 3) throw PreconditionError("dimension must be 2 or 3");
}

/// Radial map x ↦ g(|x|)·x̂ with derivative dg; Jacobian g'·x̂x̂ᵀ + (g/ρ)(I − x̂x̂ᵀ).
/// `slope_at_zero` is g'(0) = lim g(ρ)/ρ, used when x = 0.
struct RadialProfile {
    std::function<double(double)> g;
    std::function<double(double)> dg;
    std::function<double(double)> g_inv;
    double slope_at_zero = 1.0;
};

DiffMap radial_map(int dim, RadialProfile prof, std::vector<double> breaks, std::string name) {
    DiffMap m;
    m.dim = dim;
    m.forward = [prof](const Point& x) -> Point {
        const double rho = x.norm();
        if (rho == 0.0) return x;
        return Point(x * (prof.g(rho) / rho));
    };
    m.inverse = [prof](const Point& y) -> Point {
        const double s = y.norm();
        if (s == 0.0) return y;
        return Point(y * (prof.g_inv(s) / s));
    };
    m.jacobian = [prof, dim](const Point& x) -> Tensor {
        const double rho = x.norm();
        if (rho == 0.0) return Tensor(prof.slope_at_zero * identity_tensor(dim));
        const Tensor p = radial_projector(x);
        return prof.dg(rho) * p + (prof.g(rho) / rho) * (identity_tensor(dim) - p);
    };
    m.piece_boundaries = std::move(breaks);
    m.name = std::move(name);
    return m;
}

Tensor polar_tensor(const Point& y, double radial, double tangential) {
    const Tensor p = radial_projector(y);
    const auto n = y.size();
    return radial * p + tangential * (Tensor::Identity(n, n) - p);
}

}  // namespace

DiffMap identity_map(int dim) {
    check_dim(dim);
    DiffMap m;
    m.dim = dim;
    m.forward = [](const Point& x) { return x; };
    m.inverse = [](const Point& y) { return y; };
    m.jacobian = [dim](const Point&) { return identity_tensor(dim); };
    m.name = "identity";
    return m;
}

DiffMap dilation_map(int dim, double factor) {
    check_dim(dim);
    if (!(factor > 0.0)) throw PreconditionError("dilation factor must be positive");
    DiffMap m;
    m.dim = dim;
    m.forward = [factor](const Point& x) { return Point(factor * x); };
    m.inverse = [factor](const Point& y) { return Point(y / factor); };
    m.jacobian = [dim, factor](const Point&) { return Tensor(factor * identity_tensor(dim)); };
    m.name = "dilation";
    return m;
}

DiffMap regular_blowup(double r, int dim) {
    check_dim(dim);
    if (!(r > 0.0 && r < 1.0)) throw PreconditionError("regular_blowup: r must lie in (0,1)");
    const double c0 = (2.0 - 2.0 * r) / (2.0 - r);
    const double c1 = 1.0 / (2.0 - r);
    RadialProfile p;
    p.g = [r, c0, c1](double rho) {
        if (rho <= r) return rho / r;
        if (rho <= 2.0) return c0 + c1 * rho;
        return rho;
    };
    p.dg = [r, c1](double rho) {
        if (rho <= r) return 1.0 / r;
        if (rho <= 2.0) return c1;
        return 1.0;
    };
    p.g_inv = [r](double s) {
        if (s <= 1.0) return r * s;
        if (s <= 2.0) return (2.0 - r) * s - (2.0 - 2.0 * r);
        return s;
    };
    p.slope_at_zero = 1.0 / r;
    std::ostringstream name;
    name << "regular:" << r;
    return radial_map(dim, std::move(p), {r, 2.0}, name.str());
}

DiffMap singular_map(int dim) {
    check_dim(dim);
    RadialProfile p;
    p.g = [](double rho) { return rho <= 2.0 ? 1.0 + 0.5 * rho : rho; };
    p.dg = [](double rho) { return rho <= 2.0 ? 0.5 : 1.0; };
    p.g_inv = [](double s) {
        if (s <= 1.0) throw PreconditionError("singular_map: inverse undefined for |y| <= 1");
        return s <= 2.0 ? 2.0 * (s - 1.0) : s;
    };
    DiffMap m = radial_map(dim, std::move(p), {2.0}, "singular");
    m.forward = [fwd = m.forward](const Point& x) {
        if (x.norm() == 0.0) throw PreconditionError("singular_map: forward undefined at x = 0");
        return fwd(x);
    };
    m.jacobian = [jac = m.jacobian](const Point& x) {
        if (x.norm() == 0.0) throw PreconditionError("singular_map: jacobian undefined at x = 0");
        return jac(x);
    };
    return m;
}

DiffMap compose(const DiffMap& first, const DiffMap& second) {
    if (first.dim != second.dim) throw PreconditionError("compose: dimension mismatch");
    DiffMap m;
    m.dim = first.dim;
    m.forward = [f = first.forward, g = second.forward](const Point& x) { return g(f(x)); };
    m.inverse = [fi = first.inverse, gi = second.inverse](const Point& y) { return fi(gi(y)); };
    m.jacobian = [f = first.forward, jf = first.jacobian, jg = second.jacobian](const Point& x) {
        return Tensor(jg(f(x)) * jf(x));
    };
    m.piece_boundaries = first.piece_boundaries;
    for (double b : second.piece_boundaries) {
        // Pull the second map's breaks back along a ray; exact for radial maps.
        Point y = Point::Zero(first.dim);
        y[0] = b;
        m.piece_boundaries.push_back(first.inverse(y).norm());
    }
    std::sort(m.piece_boundaries.begin(), m.piece_boundaries.end());
    m.name = second.name + "∘" + first.name;
    return m;
}

Tensor fd_jacobian(const DiffMap& map, const Point& x, double step) {
    const auto n = x.size();
    Tensor j(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        Point xp = x, xm = x;
        xp[c] += step;
        xm[c] -= step;
        j.col(c) = (map.forward(xp) - map.forward(xm)) / (2.0 * step);
    }
    return j;
}

MapCheck check_map(const DiffMap& map, int samples, std::uint64_t seed, double radius) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-radius, radius);
    MapCheck out;
    while (out.samples < samples) {
        Point x(map.dim);
        for (int i = 0; i < map.dim; ++i) x[i] = uni(rng);
        const double rho = x.norm();
        if (rho > radius || rho < 1e-3) continue;
        const bool near_break = std::any_of(map.piece_boundaries.begin(), map.piece_boundaries.end(),
                                            [rho](double b) { return std::abs(rho - b) < 1e-4; });
        if (near_break) continue;
        const Point y = map.forward(x);
        out.max_inversion_error = std::max(out.max_inversion_error, (map.inverse(y) - x).norm());
        const Tensor diff = map.jacobian(x) - fd_jacobian(map, x);
        out.max_jacobian_error = std::max(out.max_jacobian_error, diff.cwiseAbs().maxCoeff());
        ++out.samples;
    }
    return out;
}

CoefficientField pushforward(const CoefficientField& a, const DiffMap& map, double sample_radius) {
    if (a.dim != map.dim) throw PreconditionError("pushforward: dimension mismatch");
    CoefficientField f;
    f.dim = a.dim;
    f.eval = [src = a.eval, inv = map.inverse, jac = map.jacobian](const Point& y, double t) {
        const Point x = inv(y);
        const Tensor d = jac(x);
        const double det = d.determinant();
        if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
            std::ostringstream msg;
            msg << "pushforward: singular jacobian at x=(" << x.transpose() << ")";
            throw NumericalError(msg.str());
        }
        const Tensor m = d * src(x, t) * d.transpose() / std::abs(det);
        return Tensor(0.5 * (m + m.transpose()));
    };

    // Bounds from the singular values of DΦ over a polar sample of the source ball.
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    const int nr = 64, nth = 16;
    for (int i = 0; i < nr; ++i) {
        const double rho = sample_radius * (i + 0.5) / nr;
        for (int k = 0; k < nth; ++k) {
            Point x = Point::Zero(a.dim);
            const double th = 2.0 * std::numbers::pi * k / nth;
            x[0] = rho * std::cos(th);
            x[1] = rho * std::sin(th);
            const Tensor d = map.jacobian(x);
            Eigen::JacobiSVD<Tensor> svd(d);
            const auto& s = svd.singularValues();
            const double det = std::abs(d.determinant());
            lo = std::min(lo, s.minCoeff() * s.minCoeff() / det);
            hi = std::max(hi, s.maxCoeff() * s.maxCoeff() / det);
        }
    }
    f.constants = {a.constants.alpha * lo, a.constants.beta * hi, a.constants.lipschitz_l * hi};
    f.name = "push(" + map.name + ")" + a.name;
    f.state_dependent = a.state_dependent;
    return f;
}

CoefficientField transformed_inner_tensor(const CoefficientField& a, double r) {
    if (!(r > 0.0 && r < 1.0)) throw PreconditionError("transformed_inner_tensor: r must lie in (0,1)");
    const double scale = std::pow(r, -(a.dim - 2));
    CoefficientField f;
    f.dim = a.dim;
    f.eval = [src = a.eval, r, scale](const Point& x, double t) {
        if (x.norm() > r * (1.0 + 1e-12)) {
            std::ostringstream msg;
            msg << "transformed_inner_tensor: |x| = " << x.norm() << " outside B_" << r;
            throw PreconditionError(msg.str());
        }
        return Tensor(scale * src(Point(x / r), t));
    };
    f.constants = {scale * a.constants.alpha, scale * a.constants.beta,
                   scale * a.constants.lipschitz_l};
    std::ostringstream name;
    name << "inner(" << r << ")" << a.name;
    f.name = name.str();
    f.state_dependent = a.state_dependent;
    return f;
}

double singular_jacobian_det(double x_radius, int dim) {
    return 0.5 * std::pow(0.5 + 1.0 / x_radius, dim - 1);
}

EigenSplit singular_cloak_eigenvalues(double x_radius, int dim) {
    const double rho = x_radius;
    const double n = dim;
    const double pre = std::pow(2.0, n) / std::pow(2.0 + rho, n - 1);
    const double tang = std::pow(rho, n - 1) / 4.0 + std::pow(rho, n - 2) + std::pow(rho, n - 3);
    return {pre * 0.25 * std::pow(rho, n - 1), pre * tang};
}

EigenSplit singular_flux_eigenvalues(double x_radius, int dim) {
    const EigenSplit e = singular_cloak_eigenvalues(x_radius, dim);
    // DF has eigenvalue 1/2 radially and 1/2 + 1/|x| tangentially.
    return {e.radial / 0.5, e.tangential / (0.5 + 1.0 / x_radius)};
}

CoefficientField singular_cloak_tensor(int dim) {
    check_dim(dim);
    CoefficientField f;
    f.dim = dim;
    f.eval = [dim](const Point& y, double) {
        const double s = y.norm();
        if (!(s > 1.0 && s < 2.0)) {
            std::ostringstream msg;
            msg << "singular_cloak_tensor: |y| = " << s << " outside (1,2)";
            throw PreconditionError(msg.str());
        }
        const EigenSplit e = singular_cloak_eigenvalues(2.0 * (s - 1.0), dim);
        return polar_tensor(y, e.radial, e.tangential);
    };
    // Degenerate at |y| → 1: no finite constants exist.
    f.constants = {std::numeric_limits<double>::min(), std::numeric_limits<double>::max(), 0.0};
    f.name = "singular-cloak";
    f.state_dependent = false;
    return f;
}

CoefficientField truncated_singular_cloak(double rho, int dim) {
    check_dim(dim);
    if (!(rho > 1.0 && rho < 2.0)) {
        throw PreconditionError("truncated_singular_cloak: rho must lie in (1,2)");
    }
    const EigenSplit frozen = singular_cloak_eigenvalues(2.0 * (rho - 1.0), dim);
    CoefficientField f;
    f.dim = dim;
    f.eval = [dim, rho, frozen](const Point& y, double) {
        const double s = y.norm();
        if (s < 1.0 || s > 2.0) return identity_tensor(dim);
        if (s < rho) return polar_tensor(y, frozen.radial, frozen.tangential);
        const EigenSplit e = singular_cloak_eigenvalues(2.0 * (s - 1.0), dim);
        return polar_tensor(y, e.radial, e.tangential);
    };
    // Both eigenvalue branches are monotone in |x| on [2(rho−1), 2].
    const EigenSplit outer = singular_cloak_eigenvalues(2.0, dim);
    const double lo = std::min({frozen.radial, frozen.tangential, outer.radial, outer.tangential, 1.0});
    const double hi = std::max({frozen.radial, frozen.tangential, outer.radial, outer.tangential, 1.0});
    f.constants = {lo, hi, 0.0};
    std::ostringstream name;
    name << "truncated-singular-cloak(" << rho << ")";
    f.name = name.str();
    f.state_dependent = false;
    return f;
}

}  // namespace cloaksim
