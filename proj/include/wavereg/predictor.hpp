#pragma once

#include <cmath>
#include <vector>

#include "wavereg/errors.hpp"
#include "wavereg/history.hpp"
#include "wavereg/kernels.hpp"
#include "wavereg/linalg.hpp"
#include "wavereg/pde_core.hpp"

namespace wavereg {

struct ControlLawParams {
    double c0;
    double c1;
    double q;

    ControlLawParams(double c0_, double c1_, double q_) : c0(c0_), c1(c1_), q(q_) {
        if (!(c0 > 0.0)) {
            throw ConfigError("c0 > 0 violated");
        }
        if (!(c1 > 0.0)) {
            throw ConfigError("c1 > 0 violated");
        }
        if (!(q > 0.0)) {
            throw ConfigError("q > 0 violated");
        }
    }
};

/// exp(S_c(theta) elapsed) d0 with theta frozen; closed form for either sign of theta.
[[nodiscard]] inline Vec2 predict_d(const Vec2& d0, double theta_frozen, double elapsed) {
    return harmonic_exp(companion(theta_frozen), theta_frozen, elapsed) * d0;
}

/// D = -(f1(1, theta) + f2(1, theta)) d, the estimate of gamma_eta eta.
[[nodiscard]] inline double predicted_D(const ThetaKernels& k, const Vec2& d_pred) {
    return -k.boundary_row().dot(d_pred.transpose());
}

/// State part of the backstepping boundary law:
/// -(eps_x(1) + c1 eps_t(1)) / (c0 + q) - int_0^1 e^{q(1-h)} (q eps + c1 eps_t) dh.
/// `weights` comes from exp_weights(q, grid).
[[nodiscard]] inline double feedback_terms(const WaveState& eps, const ControlLawParams& p, const GridField& weights,
                                           double h) {
    const Eigen::Index n = eps.disp.size() - 1;
    const double boundary = ddx_boundary(eps.disp, BoundaryEnd::right, h) + p.c1 * eps.vel(n);
    const double integral = weights.dot(p.q * eps.disp + p.c1 * eps.vel);
    return -boundary / (p.c0 + p.q) - integral;
}

/// Output-feedback law evaluated on a predictor state at time t; zero while t <= tau.
[[nodiscard]] inline double output_feedback_law(double t, double tau, const WaveState& pred, const ControlLawParams& p,
                                         double D_now, const GridField& weights, double h) {
    if (t <= tau) {
        return 0.0;
    }
    return feedback_terms(pred, p, weights, h) + D_now;
}

/// Full-information feedforward law: true (eps, eps_t) and the true disturbance state eta.
[[nodiscard]] inline double control_ff(const WaveState& eps, const Vec2& eta, const ControlLawParams& p,
                                       const GridField& weights, double h) {
    return feedback_terms(eps, p, weights, h) + eta(0);
}

/// Solves u = rhs(u) for an affine rhs by two evaluations. Used wherever the boundary value
/// being imposed also enters the law that computes it.
template <class Rhs>
[[nodiscard]] double solve_affine_boundary(Rhs&& rhs) {
    const double r0 = rhs(0.0);
    const double slope = rhs(1.0) - r0;
    if (std::abs(1.0 - slope) < 1e-12) {
        throw Error("boundary coupling is singular (unit slope)");
    }
    return r0 / (1.0 - slope);
}

/// Step end times covering [t0, t1]: an optional leading partial step, then steps of dt ending
/// exactly at t1, so every interior time lies on the history grid t1 - k dt.
[[nodiscard]] inline std::vector<double> window_times(double t0, double t1, double dt) {
    std::vector<double> out{t0};
    const double span = t1 - t0;
    if (span <= 1e-12 * std::max(1.0, std::abs(t1))) {
        return out;
    }
    const double ratio = span / dt;
    auto full = static_cast<long>(std::floor(ratio + 1e-9));
    const double rest = span - full * dt;
    if (rest > 1e-9 * dt) {
        out.push_back(t1 - full * dt);
    }
    for (long k = full - 1; k >= 0; --k) {
        out.push_back(k == 0 ? t1 : t1 - k * dt);
    }
    return out;
}

/// Disturbance side of one predictor run: theta frozen at its value at t - tau, d propagated
/// from d_hat(t - tau) through the window.
struct PredictorRun {
    double frozen_theta;
    Vec2 d0;
    double t0;
    ThetaKernels kernels;

    PredictorRun(double theta, const Vec2& d_start, double t_start, double c2)
        : frozen_theta(theta), d0(d_start), t0(t_start), kernels(theta, c2) {}

    [[nodiscard]] Vec2 d_at(double s) const { return predict_d(d0, frozen_theta, s - t0); }
    [[nodiscard]] double D_at(double s) const { return predicted_D(kernels, d_at(s)); }
};

namespace detail {

inline WaveSideData predictor_side(double q, double boundary_value) {
    return WaveSideData{RobinLeft{-q, 0.0}, DirichletRight{boundary_value}, {}};
}

} // namespace detail

/// Re-integrates the wave model over [t0, t1] from `init` with eps_x(0) = -q eps(0) and
/// eps(1) = u(s) - D(s), u read from the history. Returns `init` unchanged for an empty window.
template <class DPath>
[[nodiscard]] WaveState predict_eps(const WaveState& init, const HistoryBuffer& u_history, DPath&& D_path, double q,
                                    double t1, double dt, double h) {
    const auto times = window_times(init.t, t1, dt);
    WaveState s = init;
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double step = times[k] - times[k - 1];
        const double g = u_history.sample(times[k]) - D_path(times[k]);
        wave_half_step_inplace(s, detail::predictor_side(q, 0.0), step, h);
        wave_finish_step_inplace(s, detail::predictor_side(q, g), step, h);
        s.t = times[k];
    }
    return s;
}

struct ControlSolution {
    double u;
    double D_now;
    WaveState eps_pred; ///< predictor state at t with the solved u imposed
};

/// Runs the predictor from the observer reconstruction at t - tau up to t and solves the
/// boundary law at t. History covers every window time before t; the final step carries the
/// unknown u(t) both in the predictor boundary and in the law, and the resulting affine
/// equation is solved exactly.
[[nodiscard]] inline ControlSolution solve_control(const WaveState& eps_init, const PredictorRun& run,
                                                   const HistoryBuffer& u_history, double t, const ControlLawParams& p,
                                                   const GridField& weights, double dt, double h) {
    const auto times = window_times(eps_init.t, t, dt);
    const double D_now = run.D_at(t);
    if (times.size() == 1) {
        // zero-length window: the law reads the reconstruction directly, with its own trace
        const double u = solve_affine_boundary([&](double uc) {
            WaveState s = eps_init;
            s.disp(s.disp.size() - 1) = uc - D_now;
            return feedback_terms(s, p, weights, h) + D_now;
        });
        WaveState s = eps_init;
        s.disp(s.disp.size() - 1) = u - D_now;
        return {u, D_now, std::move(s)};
    }
    WaveState s = eps_init;
    for (std::size_t k = 1; k + 1 < times.size(); ++k) {
        const double step = times[k] - times[k - 1];
        const double g = u_history.sample(times[k]) - run.D_at(times[k]);
        wave_half_step_inplace(s, detail::predictor_side(p.q, 0.0), step, h);
        wave_finish_step_inplace(s, detail::predictor_side(p.q, g), step, h);
        s.t = times[k];
    }
    const double last = times.back() - times[times.size() - 2];
    wave_half_step_inplace(s, detail::predictor_side(p.q, 0.0), last, h);
    const WaveState half = s;
    auto finish = [&](double uc) {
        WaveState trial = half;
        wave_finish_step_inplace(trial, detail::predictor_side(p.q, uc - D_now), last, h);
        trial.t = t;
        return trial;
    };
    const double u = solve_affine_boundary([&](double uc) { return feedback_terms(finish(uc), p, weights, h) + D_now; });
    return {u, D_now, finish(u)};
}

} // namespace wavereg
