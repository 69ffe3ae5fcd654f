#pragma once

#include <cmath>
#include <string>

#include "wavereg/errors.hpp"
#include "wavereg/kernels.hpp"
#include "wavereg/linalg.hpp"
#include "wavereg/pde_core.hpp"

// The measurement-side stack runs in shifted time s = t - tau. At real time t the live
// tracking error e(t) is the sample the design calls e(s + tau).

namespace wavereg {

/// Transport compensator Y1_s = -Y1_x driven by the inflow -c2 e(s + tau).
struct CompensatorState {
    GridField Y1;
    double c2;

    CompensatorState(GridField y1, double c2_) : Y1(std::move(y1)), c2(c2_) {
        if (!(c2 > 0.0 && c2 < 1.0)) {
            throw ConfigError("0 < c2 < 1 violated");
        }
    }
};

[[nodiscard]] inline CompensatorState compensator_step(CompensatorState c, double e_now, double dt, double h) {
    transport_step_inplace(c.Y1, -c.c2 * e_now, dt, h);
    return c;
}

/// Copy of the decoupled (z, Y2) system driven by the measurement: zhat is a wave state with
/// flux datum -q e at x = 0 and Dirichlet coupling to the transports at x = 1.
struct StateObserver {
    WaveState zhat;
    GridField Y2hat;
    double left_flux = 0.0; ///< zhat_x(0) at the current time level
};

/// Advances (zhat, Y2hat) by one step. `u_s` is the control at observer time s (that is, u(t - tau)),
/// `Y1_right` the compensator trace Y1(1) after its own step.
inline void observer_step_inplace(StateObserver& o, double e_now, double u_s, double Y1_right, double q, double c2,
                                  double dt, double h) {
    const WaveSideData now{RobinLeft{0.0, o.left_flux}, DirichletRight{}, {}};
    wave_half_step_inplace(o.zhat, now, dt, h);
    transport_step_inplace(o.Y2hat, -c2 * o.zhat.disp(0), dt, h);
    const double right = u_s - (o.Y2hat(o.Y2hat.size() - 1) - Y1_right);
    o.left_flux = -q * e_now;
    const WaveSideData next{RobinLeft{0.0, o.left_flux}, DirichletRight{right}, {}};
    wave_finish_step_inplace(o.zhat, next, dt, h);
}

[[nodiscard]] inline StateObserver observer_step(StateObserver o, double e_now, double u_s, double Y1_right, double q,
                                                 double c2, double dt, double h) {
    observer_step_inplace(o, e_now, u_s, Y1_right, q, c2, dt, h);
    return o;
}

/// y_d(s) = e(s + tau) - zhat(0, s)
[[nodiscard]] inline double yd_measure(double e_now, double zhat0) { return e_now - zhat0; }

struct AdaptiveGains {
    double iota;
    double k0;
    double k1;

    AdaptiveGains(double iota_, double k0_, double k1_) : iota(iota_), k0(k0_), k1(k1_) {
        if (!(iota > 0.0)) {
            throw ConfigError("iota > 0 violated");
        }
        if (!(k0 > 1.0 / (4.0 * iota))) {
            throw ConfigError("k0 > 1/(4 iota) violated");
        }
        if (!(k1 > 0.0)) {
            throw ConfigError("k1 > 0 violated");
        }
    }
};

/// Frequency-adaptive observer of d' = S_c(theta) d, y_d = d_1.
struct AdaptiveState {
    double xi = 0.0;
    double chi1_hat = 0.0;
    double phi_hat = 0.0;
    double theta_hat = 0.0;

    [[nodiscard]] Eigen::Vector4d as_vector() const { return {xi, chi1_hat, phi_hat, theta_hat}; }
    [[nodiscard]] static AdaptiveState from_vector(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }
};

/// Right-hand side of the adaptive observer for a fixed measurement value.
[[nodiscard]] inline Eigen::Vector4d adaptive_rhs(const Eigen::Vector4d& s, const AdaptiveGains& g, double yd) {
    const double xi = s(0);
    const double chi = s(1);
    const double phi = s(2);
    const double th = s(3);
    return {-g.iota * xi - yd,
            phi + g.iota * yd + th * xi + g.k0 * (yd - chi),
            -g.iota * phi - g.iota * g.iota * yd,
            g.k1 * xi * (yd - chi)};
}

/// One classical RK4 step with y_d held over the step.
[[nodiscard]] inline AdaptiveState adaptive_step(const AdaptiveState& a, const AdaptiveGains& g, double yd, double dt,
                                                 double t_for_errors = 0.0) {
    const Eigen::Vector4d y = a.as_vector();
    const Eigen::Vector4d k1 = adaptive_rhs(y, g, yd);
    const Eigen::Vector4d k2 = adaptive_rhs(y + 0.5 * dt * k1, g, yd);
    const Eigen::Vector4d k3 = adaptive_rhs(y + 0.5 * dt * k2, g, yd);
    const Eigen::Vector4d k4 = adaptive_rhs(y + dt * k3, g, yd);
    const Eigen::Vector4d out = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!out.allFinite()) {
        throw NonFiniteError("adaptive observer state", t_for_errors);
    }
    return AdaptiveState::from_vector(out);
}

/// Estimate of d = T eta in canonical coordinates: (chi1, phi + xi theta + iota chi1).
[[nodiscard]] inline Vec2 dhat(const AdaptiveState& a, const AdaptiveGains& g) {
    return {a.chi1_hat, a.phi_hat + a.xi * a.theta_hat + g.iota * a.chi1_hat};
}

/// (eps_hat, eps_hat_s) = zhat + f1(x, theta_hat) d_hat, zhat_s + f1(x, theta_hat) S_c(theta_hat) d_hat.
[[nodiscard]] inline WaveState reconstruct_eps(const StateObserver& o, const Vec2& d_hat, double theta_hat,
                                               const Grid1D& grid) {
    WaveState out = o.zhat;
    for (int i = 0; i < grid.n_nodes(); ++i) {
        const double c = cos_like(theta_hat, grid.x(i));
        out.disp(i) += c * d_hat(0);
        out.vel(i) += c * d_hat(1);
    }
    return out;
}

/// Everything the measurement side carries for one simulation.
struct ObserverBundle {
    CompensatorState compensator;
    StateObserver state;
    AdaptiveState adaptive;
    AdaptiveGains gains;
    double s = 0.0;   ///< observer time
    double yd = 0.0;  ///< last measurement fed to the adaptive observer

    /// One step of every observer, in the order compensator, state observer, adaptive observer.
    void step(double e_now, double u_s, double q, double dt, double h) {
        transport_step_inplace(compensator.Y1, -compensator.c2 * e_now, dt, h);
        observer_step_inplace(state, e_now, u_s, compensator.Y1(compensator.Y1.size() - 1), q, compensator.c2, dt,
                              h);
        const double yd_new = yd_measure(e_now, state.zhat.disp(0));
        // y_d at the start of the step drives the hold; the new sample is stored for the next one
        adaptive = adaptive_step(adaptive, gains, yd, dt, s + dt);
        yd = yd_new;
        s += dt;
    }

    [[nodiscard]] Vec2 d_hat() const { return dhat(adaptive, gains); }
    [[nodiscard]] WaveState eps_hat(const Grid1D& grid) const {
        return reconstruct_eps(state, d_hat(), adaptive.theta_hat, grid);
    }
};

} // namespace wavereg
