#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace cloaksim {

/// Spatial point in N ≤ 3 dimensions. Fixed upper bound so evaluation never allocates.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

/// Dense N×N coefficient matrix, N ≤ 3.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline Point make_point(double x, double y) {
    Point p(2);
    p << x, y;
    return p;
}

inline Point make_point(double x, double y, double z) {
    Point p(3);
    p << x, y, z;
    return p;
}

inline Point to_point(const Vec2& v) { return make_point(v.x(), v.y()); }

inline Tensor identity_tensor(int dim) { return Tensor::Identity(dim, dim); }

/// Radial projector x̂x̂ᵀ; zero at the origin.
inline Tensor radial_projector(const Point& x) {
    const double r = x.norm();
    const auto n = x.size();
    if (r == 0.0) return Tensor::Zero(n, n);
    const Point e = x / r;
    return e * e.transpose();
}

}  // namespace cloaksim
