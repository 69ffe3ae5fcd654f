#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "wavereg/errors.hpp"
#include "wavereg/linalg.hpp"

namespace wavereg {

/// Harmonic exosystem v' = S v, y_ref = p4 v. S must have eigenvalues +-i omega.
class ExoParams {
public:
    ExoParams(const Mat2& S, const Vec2& v0, const Row2& p4) : S_(S), v0_(v0), p4_(p4) {
        const double tr = S.trace();
        const double det = S.determinant();
        if (!(std::abs(tr) <= 1e-12 * std::max(1.0, S.norm()))) {
            throw ConfigError("eigenvalues of S must be +-i*omega: trace(S) = 0 violated");
        }
        if (!(det > 0.0)) {
            throw ConfigError("eigenvalues of S must be +-i*omega: det(S) > 0 violated");
        }
        omega_ = std::sqrt(det);
    }

    [[nodiscard]] const Mat2& S() const noexcept { return S_; }
    [[nodiscard]] const Vec2& v0() const noexcept { return v0_; }
    [[nodiscard]] const Row2& p4() const noexcept { return p4_; }
    [[nodiscard]] double omega() const noexcept { return omega_; }
    [[nodiscard]] double theta() const noexcept { return omega_ * omega_; }

private:
    Mat2 S_;
    Vec2 v0_;
    Row2 p4_;
    double omega_ = 0.0;
};

/// exp(S dt) v, exact: S^2 = -omega^2 I collapses the series to cos/sin.
[[nodiscard]] inline Vec2 step_exo(const ExoParams& p, const Vec2& v, double dt) {
    return harmonic_exp(p.S(), p.theta(), dt) * v;
}

/// v(t) from the stored initial state.
[[nodiscard]] inline Vec2 exo_state(const ExoParams& p, double t) { return step_exo(p, p.v0(), t); }

[[nodiscard]] inline double reference_signal(const ExoParams& p, const Vec2& v) { return p.p4() * v; }

/// gamma_1 v(t) rewritten as the rotating pair eta(t) = exp(S_eta t) eta(0), read out by (1, 0).
struct EtaState {
    Vec2 eta0;
    double omega;

    [[nodiscard]] Mat2 S_eta() const { return rotation_generator(omega); }
    [[nodiscard]] static Row2 gamma_eta() { return Row2(1.0, 0.0); }
    [[nodiscard]] Vec2 at(double t) const { return harmonic_exp(S_eta(), omega * omega, t) * eta0; }
};

/// eta(0) = (A, B) with gamma1 v(t) = A cos(omega t) + B sin(omega t): match value and slope at t = 0.
[[nodiscard]] inline EtaState eta_initial(const Row2& gamma1, const ExoParams& p) {
    const double a = gamma1 * p.v0();
    const double b = (gamma1 * p.S() * p.v0()).value() / p.omega();
    return EtaState{Vec2(a, b), p.omega()};
}

struct CanonicalForm {
    Mat2 S_c;
    Mat2 T;
    Mat2 T_inv;
    double theta;
};

/// Observability matrix [g; g S_eta]. Satisfies S_c T = T S_eta and (1, 0) = g T^{-1}.
[[nodiscard]] inline Mat2 observability_matrix(const Mat2& S_eta, const Row2& g1_0) {
    Mat2 t;
    t.row(0) = g1_0;
    t.row(1) = g1_0 * S_eta;
    return t;
}

[[nodiscard]] inline CanonicalForm canonical_form(const Mat2& S_eta, const Row2& g1_0) {
    const Mat2 t = observability_matrix(S_eta, g1_0);
    const Eigen::JacobiSVD<Mat2> svd(t);
    const auto& sv = svd.singularValues();
    if (!(sv(1) > 1e-12 * std::max(sv(0), 1e-300))) {
        throw SingularTransformError("pair (S_eta, g1(0)) is not observable: T is singular");
    }
    const double theta = S_eta.determinant();
    return CanonicalForm{companion(theta), t, t.inverse(), theta};
}

struct ObservabilityReport {
    bool observable;
    double condition;
};

/// Rank test of [g; g S_eta] with S_eta built from omega.
[[nodiscard]] inline ObservabilityReport hautus_observable(double omega, const Row2& g1_0) {
    const Mat2 t = observability_matrix(rotation_generator(omega), g1_0);
    const Eigen::JacobiSVD<Mat2> svd(t);
    const auto& sv = svd.singularValues();
    const bool rank2 = sv(0) > 0.0 && sv(1) > 1e-12 * sv(0);
    return {rank2, rank2 ? sv(0) / sv(1) : std::numeric_limits<double>::infinity()};
}

[[nodiscard]] inline Vec2 d_from_eta(const Mat2& T, const Vec2& eta) { return T * eta; }

} // namespace wavereg
