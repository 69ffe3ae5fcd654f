#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "wavereg/errors.hpp"
#include "wavereg/exosystem.hpp"
#include "wavereg/linalg.hpp"
#include "wavereg/pde_core.hpp"
#include "wavereg/plant.hpp"

namespace wavereg {

// ---------------------------------------------------------------------------
// Regulator equations: Pi'' = Pi S^2 - p1, Pi'(0) = -q Pi(0) + p2, Pi(0) = p4 e^{tau S}
// ---------------------------------------------------------------------------

struct QuadratureOptions {
    int panels_per_cell = 2; ///< Simpson panels per grid cell (even)
    double tolerance = 1e-10;
};

struct PiSolution {
    RowField Pi;
    RowField Pi_prime;
};

/// First-order block generator [[0, S^2], [I, 0]] acting on the row [Pi, Pi'].
[[nodiscard]] inline Mat4 regulator_generator(const Mat2& S) {
    Mat4 sbar = Mat4::Zero();
    sbar.block<2, 2>(0, 2) = S * S;
    sbar.block<2, 2>(2, 0) = Mat2::Identity();
    return sbar;
}

/// Pi(0) and Pi'(0).
[[nodiscard]] inline Eigen::RowVector4d regulator_initial_row(const PlantParams& plant, const ExoParams& exo) {
    const Row2 pi0 = exo.p4() * harmonic_exp(exo.S(), exo.theta(), plant.tau);
    Eigen::RowVector4d r;
    r << pi0, plant.p2 - plant.q * pi0;
    return r;
}

namespace detail {

/// J(x_i) = int_0^{x_i} [0, p1(h)] e^{-Sbar h} dh, composite Simpson with `panels` per cell.
inline Eigen::Matrix<double, Eigen::Dynamic, 4> particular_integral(const InDomainProfile& p1, const Mat4& sbar,
                                                                     const Grid1D& grid, int panels) {
    auto integrand = [&](double h) -> Eigen::RowVector4d {
        Eigen::RowVector4d src = Eigen::RowVector4d::Zero();
        src.tail<2>() = p1(h);
        const Mat4 e = (-sbar * h).exp();
        return src * e;
    };
    Eigen::Matrix<double, Eigen::Dynamic, 4> out(grid.n_nodes(), 4);
    out.row(0).setZero();
    Eigen::RowVector4d acc = Eigen::RowVector4d::Zero();
    const double dh = grid.h() / panels;
    for (int i = 1; i < grid.n_nodes(); ++i) {
        const double a = grid.x(i - 1);
        Eigen::RowVector4d cell = integrand(a) + integrand(grid.x(i));
        for (int k = 1; k < panels; ++k) {
            cell += (k % 2 == 1 ? 4.0 : 2.0) * integrand(a + k * dh);
        }
        acc += cell * (dh / 3.0);
        out.row(i) = acc;
    }
    return out;
}

} // namespace detail

/// Closed-form regulator solution: homogeneous part through the 4x4 exponential of the block
/// generator (scaling and squaring with a Pade core), particular part by Simpson quadrature of
/// the convolution with p1. The quadrature is checked against a refined rule.
[[nodiscard]] inline PiSolution solve_Pi(const PlantParams& plant, const ExoParams& exo, const Grid1D& grid,
                                         QuadratureOptions opts = {}) {
    if (opts.panels_per_cell < 2 || opts.panels_per_cell % 2 != 0) {
        throw ConfigError("Simpson panels per cell must be even and >= 2");
    }
    const Mat4 sbar = regulator_generator(exo.S());
    const Eigen::RowVector4d r0 = regulator_initial_row(plant, exo);
    const auto coarse = detail::particular_integral(plant.p1, sbar, grid, opts.panels_per_cell);
    const auto fine = detail::particular_integral(plant.p1, sbar, grid, 2 * opts.panels_per_cell);
    const double estimate = (fine - coarse).cwiseAbs().maxCoeff() / 15.0;
    if (estimate > opts.tolerance) {
        throw QuadratureError("regulator quadrature error estimate " + std::to_string(estimate) +
                              " exceeds tolerance " + std::to_string(opts.tolerance) + " on n_cells=" +
                              std::to_string(grid.n_cells()));
    }
    PiSolution sol{RowField(grid.n_nodes(), 2), RowField(grid.n_nodes(), 2)};
    for (int i = 0; i < grid.n_nodes(); ++i) {
        const Mat4 e = (sbar * grid.x(i)).exp();
        const Eigen::RowVector4d row = (r0 - fine.row(i)) * e;
        sol.Pi.row(i) = row.head<2>();
        sol.Pi_prime.row(i) = row.tail<2>();
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Decoupling kernels g1, g2 (complex eigenvector construction)
// ---------------------------------------------------------------------------

/// g1'' = g1 S_eta^2, g1'(0) = 0, g1(1) = -gamma_eta - g2(1), g2' = -g2 S_eta, g2(0) = -c2 g1(0).
class GKernels {
public:
    GKernels(double omega, double c2) : omega_(omega), c2_(c2) {
        if (!(omega > 0.0)) {
            throw ConfigError("g kernels need omega > 0");
        }
        if (!(c2 > 0.0 && c2 < 1.0)) {
            throw ConfigError("0 < c2 < 1 violated");
        }
        using C = std::complex<double>;
        const C lambda[2] = {C(0.0, omega), C(0.0, -omega)};
        for (int j = 0; j < 2; ++j) {
            const C denom = (2.0 * c2 - 1.0) * std::exp(-lambda[j]) - std::exp(lambda[j]);
            if (std::abs(denom) < 1e-14) {
                throw DegenerateDenominatorError("g-kernel denominator (2c2-1)e^{-lambda}-e^{lambda} vanishes");
            }
            coef_[j] = 1.0 / denom;
            lambda_[j] = lambda[j];
        }
        Eigen::Matrix2cd psi;
        psi << C(1.0, 0.0), C(1.0, 0.0), C(0.0, 1.0), C(0.0, -1.0);
        psi_inv_ = psi.inverse();
    }

    [[nodiscard]] Row2 g1(double x) const { return realize(eval(x, false)); }
    [[nodiscard]] Row2 g1_prime(double x) const { return realize(eval(x, true)); }
    [[nodiscard]] Row2 g2(double x) const {
        return -c2_ * g1(0.0) * harmonic_exp(rotation_generator(-omega_), omega_ * omega_, x);
    }
    [[nodiscard]] double omega() const noexcept { return omega_; }
    [[nodiscard]] double c2() const noexcept { return c2_; }

private:
    [[nodiscard]] Eigen::RowVector2cd eval(double x, bool derivative) const {
        Eigen::RowVector2cd bar;
        for (int j = 0; j < 2; ++j) {
            const auto ep = std::exp(lambda_[j] * x);
            const auto em = std::exp(-lambda_[j] * x);
            bar(j) = derivative ? coef_[j] * lambda_[j] * (ep - em) : coef_[j] * (ep + em);
        }
        return bar * psi_inv_;
    }

    [[nodiscard]] static Row2 realize(const Eigen::RowVector2cd& z) {
        const Row2 re = z.real();
        if (z.imag().cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, re.cwiseAbs().maxCoeff())) {
            throw Error("g kernel reconstruction is not real to 1e-12");
        }
        return re;
    }

    double omega_;
    double c2_;
    std::complex<double> coef_[2];
    std::complex<double> lambda_[2];
    Eigen::Matrix2cd psi_inv_;
};

struct GSolution {
    RowField g1;
    RowField g1_prime;
    RowField g2;
};

[[nodiscard]] inline GSolution solve_g_kernels(double omega, double c2, const Grid1D& grid) {
    const GKernels k(omega, c2);
    GSolution s{RowField(grid.n_nodes(), 2), RowField(grid.n_nodes(), 2), RowField(grid.n_nodes(), 2)};
    for (int i = 0; i < grid.n_nodes(); ++i) {
        s.g1.row(i) = k.g1(grid.x(i));
        s.g1_prime.row(i) = k.g1_prime(grid.x(i));
        s.g2.row(i) = k.g2(grid.x(i));
    }
    return s;
}

/// Every kernel the design needs for one scenario, sampled on one grid.
struct KernelTable {
    Grid1D grid;
    RowField Pi;
    RowField Pi_prime;
    RowField g1;
    RowField g1_prime;
    RowField g2;
    Row2 gamma1;
    Row2 g1_0;
};

[[nodiscard]] inline KernelTable build_kernel_table(const PlantParams& plant, const ExoParams& exo, double c2,
                                                    const Grid1D& grid, QuadratureOptions opts = {}) {
    auto pi = solve_Pi(plant, exo, grid, opts);
    auto g = solve_g_kernels(exo.omega(), c2, grid);
    const Row2 gamma1 = pi.Pi.row(grid.n_cells()) - plant.p3;
    const Row2 g10 = g.g1.row(0);
    return KernelTable{grid,           std::move(pi.Pi), std::move(pi.Pi_prime), std::move(g.g1),
                       std::move(g.g1_prime), std::move(g.g2), gamma1, g10};
}

// ---------------------------------------------------------------------------
// Theta-parameterized kernels f1, f2 in observer canonical coordinates
// ---------------------------------------------------------------------------

/// f1'' = f1 S_c^2, f1(0) = (1, 0), f1'(0) = 0; f2' = -f2 S_c, f2(0) = -c2 (1, 0).
/// Defined for any theta, including the theta <= 0 values an adaptive estimate passes through.
class ThetaKernels {
public:
    ThetaKernels(double theta, double c2) : theta_(theta), c2_(c2) {}

    [[nodiscard]] Row2 f1(double x) const { return {cos_like(theta_, x), 0.0}; }
    [[nodiscard]] Row2 f1_prime(double x) const { return {-theta_ * sin_like(theta_, x), 0.0}; }
    [[nodiscard]] Row2 f2(double x) const { return -c2_ * Row2(cos_like(theta_, x), -sin_like(theta_, x)); }

    /// f1(1) + f2(1), the row that maps d to -gamma_eta eta.
    [[nodiscard]] Row2 boundary_row() const { return f1(1.0) + f2(1.0); }
    [[nodiscard]] Mat2 S_c() const { return companion(theta_); }
    [[nodiscard]] double theta() const noexcept { return theta_; }
    [[nodiscard]] double c2() const noexcept { return c2_; }

private:
    double theta_;
    double c2_;
};

[[nodiscard]] inline ThetaKernels make_theta_kernels(double theta, double c2) { return {theta, c2}; }

struct FGIdentityReport {
    double f1_residual = 0.0;  ///< max |f1 - g1 T^{-1}| over the grid
    double f2_residual = 0.0;  ///< max |f2 - g2 T^{-1}|
    double disturbance_row_residual = 0.0; ///< max |gamma_eta eta + (f1(1) + f2(1)) d| along one period
};

[[nodiscard]] inline FGIdentityReport verify_f_g_identity(const ThetaKernels& f, const KernelTable& k,
                                                          const CanonicalForm& cf, const EtaState& eta,
                                                          int period_samples = 64) {
    FGIdentityReport r;
    for (int i = 0; i < k.grid.n_nodes(); ++i) {
        const double x = k.grid.x(i);
        r.f1_residual = std::max(r.f1_residual, (f.f1(x) - Row2(k.g1.row(i)) * cf.T_inv).cwiseAbs().maxCoeff());
        r.f2_residual = std::max(r.f2_residual, (f.f2(x) - Row2(k.g2.row(i)) * cf.T_inv).cwiseAbs().maxCoeff());
    }
    const double period = 2.0 * std::numbers::pi / eta.omega;
    const Row2 row = f.boundary_row();
    for (int j = 0; j <= period_samples; ++j) {
        const double s = period * j / period_samples;
        const Vec2 e = eta.at(s);
        const Vec2 d = cf.T * e;
        r.disturbance_row_residual = std::max(r.disturbance_row_residual, std::abs((EtaState::gamma_eta() * e).value() + row * d));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Backstepping transform pair
// ---------------------------------------------------------------------------

/// eps_bar = eps + (c0 + q) int_0^x e^{q (x - h)} eps(h) dh, applied to displacement and velocity.
[[nodiscard]] inline WaveState backstep_forward(const WaveState& s, double c0, double q, double h) {
    const double k = c0 + q;
    return {s.disp + k * cumulative_exp_convolution(s.disp, q, h),
            s.vel + k * cumulative_exp_convolution(s.vel, q, h), s.t};
}

/// eps = eps_bar - (c0 + q) int_0^x e^{-c0 (x - h)} eps_bar(h) dh.
[[nodiscard]] inline WaveState backstep_inverse(const WaveState& s, double c0, double q, double h) {
    const double k = c0 + q;
    return {s.disp - k * cumulative_exp_convolution(s.disp, -c0, h),
            s.vel - k * cumulative_exp_convolution(s.vel, -c0, h), s.t};
}

} // namespace wavereg
