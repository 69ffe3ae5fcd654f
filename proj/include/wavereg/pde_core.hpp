#pragma once

#include <cmath>
#include <span>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "wavereg/errors.hpp"

namespace wavereg {

/// Samples of a scalar function on the grid nodes.
using GridField = Eigen::VectorXd;

/// Samples of a 1x2 row-vector function; row i holds the value at node i.
using RowField = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Uniform node set x_i = i h, i = 0..n_cells, on [0, 1].
class Grid1D {
public:
    explicit Grid1D(int n_cells) : n_cells_(n_cells), h_(1.0 / n_cells) {
        if (n_cells < 2) {
            throw ConfigError("grid needs n_cells >= 2");
        }
    }

    [[nodiscard]] int n_cells() const noexcept { return n_cells_; }
    [[nodiscard]] int n_nodes() const noexcept { return n_cells_ + 1; }
    [[nodiscard]] double h() const noexcept { return h_; }
    [[nodiscard]] double x(int i) const noexcept { return i == n_cells_ ? 1.0 : i * h_; }

    template <class F>
    [[nodiscard]] GridField sample(F&& f) const {
        GridField out(n_nodes());
        for (int i = 0; i < n_nodes(); ++i) {
            out(i) = f(x(i));
        }
        return out;
    }

    [[nodiscard]] GridField zeros() const { return GridField::Zero(n_nodes()); }

private:
    int n_cells_;
    double h_;
};

/// Displacement/velocity pair of a wave-type subsystem at time t.
struct WaveState {
    GridField disp;
    GridField vel;
    double t = 0.0;

    [[nodiscard]] static WaveState zero(const Grid1D& g, double t = 0.0) {
        return {g.zeros(), g.zeros(), t};
    }
};

/// w_x(0) = a w(0) + b
struct RobinLeft {
    double a = 0.0;
    double b = 0.0;
};

/// w(1) = g, imposed at the node.
struct DirichletRight {
    double g = 0.0;
};

/// w_x(1) = a w_t(1) + b
struct RobinRight {
    double a = 0.0;
    double b = 0.0;
};

using RightBoundary = std::variant<DirichletRight, RobinRight>;

/// Boundary data and in-domain forcing valid at one time level. Empty forcing means none.
struct WaveSideData {
    RobinLeft left;
    RightBoundary right;
    std::span<const double> forcing{};
};

namespace detail {

inline void check_cfl(double dt, double h, double limit, const char* scheme) {
    if (!(dt > 0.0) || dt > limit * h * (1.0 + 1e-12)) {
        throw CflError(std::string(scheme) + ": dt=" + std::to_string(dt) + " violates CFL limit " +
                       std::to_string(limit) + "*h=" + std::to_string(limit * h));
    }
}

inline double forcing_at(std::span<const double> f, int i) { return f.empty() ? 0.0 : f[static_cast<std::size_t>(i)]; }

/// Central second difference with ghost-node elimination at x = 0 (Robin). Valid for 0 <= i < N.
inline double accel(const GridField& w, int i, const RobinLeft& left, std::span<const double> f, double h) {
    const double inv_h2 = 1.0 / (h * h);
    if (i == 0) {
        // ghost: w_{-1} = w_1 - 2h (a w_0 + b)
        return (2.0 * w(1) - 2.0 * w(0) - 2.0 * h * (left.a * w(0) + left.b)) * inv_h2 + forcing_at(f, 0);
    }
    return (w(i + 1) - 2.0 * w(i) + w(i - 1)) * inv_h2 + forcing_at(f, i);
}

inline void check_finite(const WaveState& s, const char* what) {
    if (!s.disp.allFinite() || !s.vel.allFinite()) {
        throw NonFiniteError(what, s.t);
    }
}

} // namespace detail

/// First half of a velocity-Verlet step: half kick with data at t_n, then drift to t_{n+1}.
/// For a Dirichlet right end the boundary node keeps its old value until wave_finish_step.
inline void wave_half_step_inplace(WaveState& s, const WaveSideData& now, double dt, double h) {
    detail::check_cfl(dt, h, 1.0, "wave_step");
    const int last = static_cast<int>(s.disp.size()) - 1;
    for (int i = 0; i < last; ++i) {
        s.vel(i) += 0.5 * dt * detail::accel(s.disp, i, now.left, now.forcing, h);
    }
    if (const auto* rr = std::get_if<RobinRight>(&now.right)) {
        const double ghost_flux = 2.0 * h * (rr->a * s.vel(last) + rr->b);
        const double a_n = (2.0 * s.disp(last - 1) - 2.0 * s.disp(last) + ghost_flux) / (h * h) +
                           detail::forcing_at(now.forcing, last);
        s.vel(last) += 0.5 * dt * a_n;
        s.disp(last) += dt * s.vel(last);
    }
    for (int i = 0; i < last; ++i) {
        s.disp(i) += dt * s.vel(i);
    }
    s.t += dt;
}

/// Second half: impose the right boundary at t_{n+1}, then kick with the new accelerations.
/// The Dirichlet node velocity is the midpoint difference of its boundary data plus a half kick
/// with the one-sided second difference, which keeps it second order.
inline void wave_finish_step_inplace(WaveState& s, const WaveSideData& next, double dt, double h) {
    const int last = static_cast<int>(s.disp.size()) - 1;
    if (const auto* d = std::get_if<DirichletRight>(&next.right)) {
        const double mid = (d->g - s.disp(last)) / dt;
        const double a_n = (d->g - 2.0 * s.disp(last - 1) + s.disp(last - 2)) / (h * h) +
                           detail::forcing_at(next.forcing, last);
        s.vel(last) = mid + 0.5 * dt * a_n;
        s.disp(last) = d->g;
    } else {
        const auto& rr = std::get<RobinRight>(next.right);
        // implicit in the boundary velocity: v (1 - dt a / h) = v_half + dt/2 * (rest of a_N)
        const double rest = (2.0 * s.disp(last - 1) - 2.0 * s.disp(last) + 2.0 * h * rr.b) / (h * h) +
                            detail::forcing_at(next.forcing, last);
        s.vel(last) = (s.vel(last) + 0.5 * dt * rest) / (1.0 - dt * rr.a / h);
    }
    for (int i = 0; i < last; ++i) {
        s.vel(i) += 0.5 * dt * detail::accel(s.disp, i, next.left, next.forcing, h);
    }
    detail::check_finite(s, "wave state");
}

/// One explicit step of w_tt = w_xx + f, second order in space and time, with boundary data
/// and forcing given separately at the old and new time levels.
[[nodiscard]] inline WaveState wave_step(WaveState s, const WaveSideData& now, const WaveSideData& next,
                                         double dt, double h) {
    wave_half_step_inplace(s, now, dt, h);
    wave_finish_step_inplace(s, next, dt, h);
    return s;
}

/// Same with boundary data and forcing frozen over the step.
[[nodiscard]] inline WaveState wave_step(const WaveState& s, const RobinLeft& left, const RightBoundary& right,
                                         std::span<const double> forcing, double dt, double h) {
    const WaveSideData data{left, right, forcing};
    return wave_step(s, data, data, dt, h);
}

/// First-order upwind step of Y_s = -Y_x (speed 1, characteristics moving right), inflow at x = 0.
inline void transport_step_inplace(GridField& y, double inflow, double dt, double h) {
    detail::check_cfl(dt, h, 1.0, "transport_step");
    const double nu = dt / h;
    for (Eigen::Index i = y.size() - 1; i > 0; --i) {
        y(i) -= nu * (y(i) - y(i - 1));
    }
    y(0) = inflow;
}

[[nodiscard]] inline GridField transport_step(GridField y, double inflow, double dt, double h) {
    transport_step_inplace(y, inflow, dt, h);
    return y;
}

/// Composite trapezoid rule on the grid nodes.
[[nodiscard]] inline double trapezoid(const GridField& f, double h) {
    const Eigen::Index n = f.size();
    return h * (f.sum() - 0.5 * (f(0) + f(n - 1)));
}

/// Trapezoid weights multiplied by e^{q (1 - x_i)}; dot with a field to get the weighted integral.
[[nodiscard]] inline GridField exp_weights(double q, const Grid1D& g) {
    GridField w = g.sample([q](double x) { return std::exp(q * (1.0 - x)); }) * g.h();
    w(0) *= 0.5;
    w(g.n_cells()) *= 0.5;
    return w;
}

/// int_0^1 e^{q (1 - x)} f(x) dx by the trapezoid rule.
[[nodiscard]] inline double weighted_integral(const GridField& f, double q, const Grid1D& g) {
    return exp_weights(q, g).dot(f);
}

enum class BoundaryEnd { left, right };

/// Three-point one-sided first derivative, second order, exact on quadratics.
[[nodiscard]] inline double ddx_boundary(const GridField& f, BoundaryEnd end, double h) {
    const Eigen::Index n = f.size() - 1;
    if (n < 2) {
        throw ConfigError("ddx_boundary needs at least 3 nodes");
    }
    if (end == BoundaryEnd::left) {
        return (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
    }
    return (3.0 * f(n) - 4.0 * f(n - 1) + f(n - 2)) / (2.0 * h);
}

/// 1/2 int (w_x^2 + w_t^2) dx + 1/2 q w(0)^2. Gradient squared integrated cellwise (midpoint),
/// velocity squared by trapezoid.
[[nodiscard]] inline double energy(const WaveState& s, double q, double h) {
    const Eigen::Index n = s.disp.size() - 1;
    const GridField dx = (s.disp.tail(n) - s.disp.head(n)) / h;
    const double grad = dx.squaredNorm() * h;
    const double kin = trapezoid(s.vel.cwiseAbs2(), h);
    return 0.5 * (grad + kin) + 0.5 * q * s.disp(0) * s.disp(0);
}

/// I(x_i) = int_0^{x_i} e^{rate (x_i - s)} f(s) ds, composite trapezoid on nodes, O(n) recursion.
[[nodiscard]] inline GridField cumulative_exp_convolution(const GridField& f, double rate, double h) {
    GridField out(f.size());
    const double decay = std::exp(rate * h);
    out(0) = 0.0;
    for (Eigen::Index i = 1; i < f.size(); ++i) {
        out(i) = decay * out(i - 1) + 0.5 * h * (decay * f(i - 1) + f(i));
    }
    return out;
}

} // namespace wavereg
