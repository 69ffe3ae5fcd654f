#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace wavereg {

using Vec2 = Eigen::Vector2d;
using Row2 = Eigen::RowVector2d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;

/// Below this |theta| the trigonometric/hyperbolic forms switch to their Taylor limit.
inline constexpr double kThetaBranchEps = 1e-8;

/// cos(sqrt(theta) x), continued analytically to theta <= 0 (cosh branch, polynomial limit).
[[nodiscard]] inline double cos_like(double theta, double x) {
    if (theta > kThetaBranchEps) {
        return std::cos(std::sqrt(theta) * x);
    }
    if (theta < -kThetaBranchEps) {
        return std::cosh(std::sqrt(-theta) * x);
    }
    const double tx2 = theta * x * x;
    return 1.0 - tx2 / 2.0 + tx2 * tx2 / 24.0;
}

/// sin(sqrt(theta) x) / sqrt(theta), continued analytically to theta <= 0.
[[nodiscard]] inline double sin_like(double theta, double x) {
    if (theta > kThetaBranchEps) {
        const double r = std::sqrt(theta);
        return std::sin(r * x) / r;
    }
    if (theta < -kThetaBranchEps) {
        const double r = std::sqrt(-theta);
        return std::sinh(r * x) / r;
    }
    const double tx2 = theta * x * x;
    return x * (1.0 - tx2 / 6.0 + tx2 * tx2 / 120.0);
}

/// exp(M t) for any 2x2 M with M^2 = -theta I (rotation generators, companion matrices).
[[nodiscard]] inline Mat2 harmonic_exp(const Mat2& M, double theta, double t) {
    return cos_like(theta, t) * Mat2::Identity() + sin_like(theta, t) * M;
}

/// Observer canonical companion matrix [[0, 1], [-theta, 0]].
[[nodiscard]] inline Mat2 companion(double theta) {
    Mat2 m;
    m << 0.0, 1.0, -theta, 0.0;
    return m;
}

/// Skew generator [[0, omega], [-omega, 0]].
[[nodiscard]] inline Mat2 rotation_generator(double omega) {
    Mat2 m;
    m << 0.0, omega, -omega, 0.0;
    return m;
}

} // namespace wavereg
