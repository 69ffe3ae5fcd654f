#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "wavereg/errors.hpp"
#include "wavereg/exosystem.hpp"
#include "wavereg/history.hpp"
#include "wavereg/kernels.hpp"
#include "wavereg/observer.hpp"
#include "wavereg/pde_core.hpp"
#include "wavereg/predictor.hpp"
#include "wavereg/scenario.hpp"

namespace wavereg {

enum class RunMode { open_loop, state_feedback, observer_error, adaptive_only, full };

[[nodiscard]] inline RunMode parse_run_mode(std::string_view name) {
    if (name == "open_loop") {
        return RunMode::open_loop;
    }
    if (name == "state_feedback") {
        return RunMode::state_feedback;
    }
    if (name == "observer_error") {
        return RunMode::observer_error;
    }
    if (name == "adaptive_only") {
        return RunMode::adaptive_only;
    }
    if (name == "full") {
        return RunMode::full;
    }
    throw ConfigError("unknown run mode '" + std::string(name) +
                      "' (expected open_loop, state_feedback, observer_error, adaptive_only or full)");
}

[[nodiscard]] inline const char* to_string(RunMode m) {
    switch (m) {
    case RunMode::open_loop:
        return "open_loop";
    case RunMode::state_feedback:
        return "state_feedback";
    case RunMode::observer_error:
        return "observer_error";
    case RunMode::adaptive_only:
        return "adaptive_only";
    case RunMode::full:
        return "full";
    }
    return "full";
}

struct RunOptions {
    /// When set, state_feedback and observer_error draw random smooth initial data from this seed
    /// instead of the scenario fields.
    std::optional<std::uint64_t> seed;
};

/// One exported sample. Columns that a mode does not produce hold 0; the two diagnostic
/// columns are empty instead.
struct RunRow {
    double t = 0.0;
    double e = 0.0;
    double u = 0.0;
    double theta_hat = 0.0;
    double yd = 0.0;
    double w0t = 0.0;
    double yref = 0.0;
    double energy_plant = 0.0;
    std::optional<double> energy_obs_err;
    std::optional<double> pred_err;
};

struct RunOutput {
    std::string scenario_name;
    RunMode mode = RunMode::full;
    std::vector<RunRow> rows;
    GridField x_final;
    GridField w_final;
    GridField wt_final;
    std::uint64_t scenario_hash = 0;
    int n_cells = 0;
    double dt = 0.0;
    double wall_seconds = 0.0;

    /// Column of the time series by CSV name.
    [[nodiscard]] std::vector<double> column(std::string_view name) const;
    [[nodiscard]] std::vector<double> times() const { return column("t"); }
};

inline std::vector<double> RunOutput::column(std::string_view name) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (name == "t") {
            out.push_back(r.t);
        } else if (name == "e") {
            out.push_back(r.e);
        } else if (name == "u") {
            out.push_back(r.u);
        } else if (name == "theta_hat") {
            out.push_back(r.theta_hat);
        } else if (name == "yd") {
            out.push_back(r.yd);
        } else if (name == "w0t") {
            out.push_back(r.w0t);
        } else if (name == "yref") {
            out.push_back(r.yref);
        } else if (name == "energy_plant") {
            out.push_back(r.energy_plant);
        } else if (name == "energy_obs_err") {
            out.push_back(r.energy_obs_err.value_or(std::nan("")));
        } else if (name == "pred_err") {
            out.push_back(r.pred_err.value_or(std::nan("")));
        } else {
            throw ConfigError("unknown column '" + std::string(name) + "'");
        }
    }
    return out;
}

/// FNV-1a over the canonical scenario text.
[[nodiscard]] inline std::uint64_t scenario_hash(const ScenarioParams& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : to_text(s)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// sqrt(int dx^2 + dx_x^2 + dv^2): the H1 x L2 norm of a displacement/velocity pair.
[[nodiscard]] inline double h1l2_norm(const WaveState& s, double h) {
    const Eigen::Index n = s.disp.size() - 1;
    const GridField dx = (s.disp.tail(n) - s.disp.head(n)) / h;
    return std::sqrt(dx.squaredNorm() * h + trapezoid(s.disp.cwiseAbs2(), h) + trapezoid(s.vel.cwiseAbs2(), h));
}

/// Half the squared state-space norm of the observer-error triple:
/// 1/2 int (z^2 + z_x^2 + z_s^2 + Y2^2 + Y2_x^2).
[[nodiscard]] inline double observer_error_energy(const WaveState& z, const GridField& y2, double h) {
    const Eigen::Index n = y2.size() - 1;
    const GridField dy = (y2.tail(n) - y2.head(n)) / h;
    const double zn = h1l2_norm(z, h);
    return 0.5 * (zn * zn + trapezoid(y2.cwiseAbs2(), h) + dy.squaredNorm() * h);
}

namespace detail {

/// sum_k a_k sin^2(pi x / 2) sin(k pi (1 - x)), a_k ~ U(-1, 1) / k, k = 1..4.
/// Every term vanishes with its slope at x = 0 and vanishes at x = 1.
inline GridField random_modes(std::mt19937_64& rng, const Grid1D& g) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double a[4];
    for (int k = 0; k < 4; ++k) {
        a[k] = dist(rng) / (k + 1);
    }
    return g.sample([&](double x) {
        const double envelope = std::pow(std::sin(0.5 * std::numbers::pi * x), 2);
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
            acc += a[k] * std::sin((k + 1) * std::numbers::pi * (1.0 - x));
        }
        return envelope * acc;
    });
}

inline void check_bounded(const WaveState& s, const char* what) {
    detail::check_finite(s, what);
    if (s.disp.cwiseAbs().maxCoeff() > 1e12 || s.vel.cwiseAbs().maxCoeff() > 1e12) {
        throw NonFiniteError(what, s.t);
    }
}

/// Everything derived once from a scenario.
struct Setup {
    ScenarioParams s;
    Grid1D grid;
    double dt;
    double h;
    ExoParams exo;
    KernelTable kernels;
    EtaState eta;
    CanonicalForm canonical;
    RowField P1;
    GridField weights;
    ControlLawParams law;
    long n_steps;

    explicit Setup(const ScenarioParams& sp)
        : s(sp), grid(sp.numerics.n_cells), dt(sp.dt()), h(grid.h()), exo(sp.exo()),
          kernels(build_kernel_table(sp.plant, exo, sp.c2, grid)), eta(eta_initial(kernels.gamma1, exo)),
          canonical(canonical_form(eta.S_eta(), kernels.g1_0)), P1(grid.n_nodes(), 2),
          weights(exp_weights(sp.plant.q, grid)), law(sp.c0, sp.c1, sp.plant.q),
          n_steps(std::lround(sp.numerics.t_final / dt)) {
        for (int i = 0; i < grid.n_nodes(); ++i) {
            P1.row(i) = sp.plant.p1(grid.x(i));
        }
    }

    [[nodiscard]] double time(long n) const { return static_cast<double>(n) * dt; }
    [[nodiscard]] Vec2 v(double t) const { return exo_state(exo, t); }

    /// eps = w - Pi v, eps_t = w_t - Pi S v.
    [[nodiscard]] WaveState eps_of(const WaveState& w) const {
        const Vec2 vt = v(w.t);
        return {w.disp - kernels.Pi * vt, w.vel - kernels.Pi * (exo.S() * vt), w.t};
    }

    [[nodiscard]] WaveState w_of(const WaveState& eps) const {
        const Vec2 vt = v(eps.t);
        return {eps.disp + kernels.Pi * vt, eps.vel + kernels.Pi * (exo.S() * vt), eps.t};
    }

    [[nodiscard]] WaveSideData plant_side(double t, double u, GridField& forcing_store) const {
        const Vec2 vt = v(t);
        forcing_store = P1 * vt;
        return {RobinLeft{-s.plant.q, s.plant.p2 * vt}, DirichletRight{u + s.plant.p3 * vt},
                std::span<const double>(forcing_store.data(), static_cast<std::size_t>(forcing_store.size()))};
    }

    [[nodiscard]] ObserverBundle make_observers(double s_start, double e_start) const {
        CompensatorState comp(grid.sample(s.init.Y10), s.c2);
        StateObserver st{WaveState{grid.sample(s.init.zhat0), grid.sample(s.init.zhat_s0), s_start},
                         grid.sample(s.init.Y2hat0), -s.plant.q * e_start};
        AdaptiveState ad{s.init.xi0, s.init.chi0, s.init.phi0, s.init.theta0};
        ObserverBundle b{std::move(comp), std::move(st), ad, AdaptiveGains(s.iota, s.k0, s.k1), s_start, 0.0};
        b.yd = yd_measure(e_start, b.state.zhat.disp(0));
        return b;
    }

    [[nodiscard]] bool export_due(long n) const { return n % s.numerics.export_stride == 0 || n == n_steps; }
};

inline RunOutput start_output(const Setup& st, RunMode mode) {
    RunOutput out;
    out.scenario_name = st.s.name;
    out.mode = mode;
    out.scenario_hash = scenario_hash(st.s);
    out.n_cells = st.grid.n_cells();
    out.dt = st.dt;
    out.x_final = st.grid.sample([](double x) { return x; });
    out.rows.reserve(static_cast<std::size_t>(st.n_steps / st.s.numerics.export_stride + 2));
    return out;
}

/// Plant closed loop: open_loop, full (optionally with diagnostics) and state_feedback.
inline RunOutput run_plant_loop(const Setup& st, RunMode mode, const RunOptions& opts) {
    const auto& sp = st.s;
    const double q = sp.plant.q;
    const double tau = sp.plant.tau;
    const double dt = st.dt;
    const double h = st.h;
    const double tol = 1e-9 * dt;
    const bool observers_on = mode == RunMode::full;
    const bool diagnostics = mode == RunMode::full;

    WaveState w{st.grid.sample(sp.init.w0), st.grid.sample(sp.init.w1), 0.0};
    if (mode == RunMode::state_feedback && opts.seed) {
        std::mt19937_64 rng(*opts.seed);
        WaveState eps0{random_modes(rng, st.grid), random_modes(rng, st.grid), 0.0};
        // shift the velocity along one mode so the feedback law holds at t = 0 with u(0) = eps(1, 0) + gamma1 v0
        const GridField corr = st.grid.sample([](double x) {
            return std::pow(std::sin(0.5 * std::numbers::pi * x), 2) * std::sin(std::numbers::pi * (1.0 - x));
        });
        const GridField none = st.grid.zeros();
        const double f0 = feedback_terms(eps0, st.law, st.weights, st.h);
        const double f1 = feedback_terms(WaveState{none, corr, 0.0}, st.law, st.weights, st.h);
        eps0.vel -= (f0 / f1) * corr;
        w = st.w_of(eps0);
    }

    const double retention = tau + 4.0 * dt;
    HistoryBuffer w0_hist(retention);
    HistoryBuffer u_hist(retention);
    w0_hist.push(0.0, w.disp(0));
    u_hist.push(0.0, 0.0);

    auto measured = [&](double t) {
        // y_p = 0 before the first delayed sample arrives
        if (t < tau - tol) {
            return -reference_signal(st.exo, st.v(t));
        }
        const double at = std::min(t - tau, w0_hist.back_time());
        return w0_hist.sample(std::max(at, 0.0)) - reference_signal(st.exo, st.v(t));
    };

    std::optional<ObserverBundle> obs;
    auto activate_if_due = [&](double t, double e_now) {
        if (observers_on && !obs && t >= tau - tol) {
            obs.emplace(st.make_observers(std::max(t - tau, 0.0), e_now));
        }
    };

    std::deque<WaveState> eps_ring;
    auto eps_at = [&](double t) -> const WaveState& {
        const WaveState* best = &eps_ring.back();
        for (const auto& e : eps_ring) {
            if (std::abs(e.t - t) < std::abs(best->t - t)) {
                best = &e;
            }
        }
        return *best;
    };

    RunOutput out = start_output(st, mode);
    auto record = [&](double t, double e, double u, const WaveState& eps, std::optional<double> obs_err,
                      std::optional<double> pred_err) {
        RunRow r;
        r.t = t;
        r.e = e;
        r.u = u;
        if (obs) {
            r.theta_hat = obs->adaptive.theta_hat;
            r.yd = obs->yd;
        }
        r.w0t = w.disp(0);
        r.yref = reference_signal(st.exo, st.v(t));
        r.energy_plant = energy(eps, q, h);
        r.energy_obs_err = obs_err;
        r.pred_err = pred_err;
        out.rows.push_back(r);
    };

    double e_now = measured(0.0);
    activate_if_due(0.0, e_now);
    {
        const WaveState eps0 = st.eps_of(w);
        if (diagnostics) {
            eps_ring.push_back(eps0);
        }
        record(0.0, e_now, 0.0, eps0, std::nullopt, std::nullopt);
    }

    GridField f_now;
    GridField f_next;
    double u = 0.0;
    for (long n = 0; n < st.n_steps; ++n) {
        const double t = st.time(n);
        const double t1 = st.time(n + 1);
        const double e1 = measured(t1);

        std::optional<ControlSolution> ctrl;
        WaveState eps_hat_start;
        if (obs) {
            const double s1 = t1 - tau;
            obs->step(e1, u_hist.sample(std::max(std::min(s1, u_hist.back_time()), 0.0)), q, dt, h);
            obs->s = s1;
            if (t1 > tau + tol && (n + 1) % sp.numerics.predictor_stride == 0) {
                eps_hat_start = obs->eps_hat(st.grid);
                eps_hat_start.t = s1;
                const PredictorRun run(obs->adaptive.theta_hat, obs->d_hat(), s1, sp.c2);
                ctrl = solve_control(eps_hat_start, run, u_hist, t1, st.law, st.weights, dt, h);
                u = ctrl->u;
            }
        }
        activate_if_due(t1, e1);

        const WaveSideData now = st.plant_side(t, 0.0, f_now);
        wave_half_step_inplace(w, now, dt, h);
        if (mode == RunMode::state_feedback) {
            const WaveState half = w;
            const Vec2 eta1 = st.eta.at(t1);
            u = solve_affine_boundary([&](double uc) {
                WaveState trial = half;
                wave_finish_step_inplace(trial, st.plant_side(t1, uc, f_next), dt, h);
                trial.t = t1;
                return control_ff(st.eps_of(trial), eta1, st.law, st.weights, h);
            });
        } else if (mode == RunMode::open_loop) {
            u = 0.0;
        }
        wave_finish_step_inplace(w, st.plant_side(t1, u, f_next), dt, h);
        w.t = t1;
        check_bounded(w, "plant state");

        w0_hist.push(t1, w.disp(0));
        u_hist.push(t1, u);

        const WaveState eps = st.eps_of(w);
        std::optional<double> obs_err;
        std::optional<double> pred_err;
        if (diagnostics) {
            eps_ring.push_back(eps);
            while (eps_ring.size() > 2 && eps_ring.front().t < t1 - retention) {
                eps_ring.pop_front();
            }
            if (ctrl) {
                const WaveState& past = eps_at(t1 - tau);
                WaveState diff{past.disp - eps_hat_start.disp, past.vel - eps_hat_start.vel, t1};
                obs_err = energy(diff, q, h);
                WaveState pdiff{ctrl->eps_pred.disp - eps.disp, ctrl->eps_pred.vel - eps.vel, t1};
                pred_err = h1l2_norm(pdiff, h);
            }
        }
        if (st.export_due(n + 1)) {
            record(t1, e1, u, eps, obs_err, pred_err);
        }
    }
    out.w_final = w.disp;
    out.wt_final = w.vel;
    return out;
}

/// Observer-error system: the state observer with zero measurement, zero input and zero compensator.
inline RunOutput run_observer_error(const Setup& st, const RunOptions& opts) {
    const auto& sp = st.s;
    const double dt = st.dt;
    const double h = st.h;
    StateObserver o;
    if (opts.seed) {
        std::mt19937_64 rng(*opts.seed);
        const GridField z0 = random_modes(rng, st.grid) + GridField::Constant(st.grid.n_nodes(), 0.5);
        const GridField z1 = random_modes(rng, st.grid);
        const double za = z0(0);
        const double zb = z0(st.grid.n_cells());
        GridField y2 = random_modes(rng, st.grid);
        for (int i = 0; i < st.grid.n_nodes(); ++i) {
            const double x = st.grid.x(i);
            // compatible corners: Y2(0) = -c2 z(0), z(1) = -Y2(1)
            y2(i) = y2(i) * std::sin(std::numbers::pi * x) - sp.c2 * za * (1.0 - x) - zb * x;
        }
        o = StateObserver{WaveState{z0, z1, 0.0}, y2, 0.0};
    } else {
        o = StateObserver{WaveState{st.grid.sample(sp.init.zhat0), st.grid.sample(sp.init.zhat_s0), 0.0},
                          st.grid.sample(sp.init.Y2hat0), 0.0};
    }
    RunOutput out = start_output(st, RunMode::observer_error);
    auto record = [&](double s) {
        RunRow r;
        r.t = s;
        r.e = o.zhat.disp(0);
        r.energy_obs_err = observer_error_energy(o.zhat, o.Y2hat, h);
        out.rows.push_back(r);
    };
    record(0.0);
    for (long n = 0; n < st.n_steps; ++n) {
        observer_step_inplace(o, 0.0, 0.0, 0.0, sp.plant.q, sp.c2, dt, h);
        o.zhat.t = st.time(n + 1);
        check_bounded(o.zhat, "observer error state");
        if (st.export_due(n + 1)) {
            record(st.time(n + 1));
        }
    }
    out.w_final = o.zhat.disp;
    out.wt_final = o.zhat.vel;
    return out;
}

/// Adaptive observer alone, fed the exact disturbance measurement y_d = g1(0) eta(s).
inline RunOutput run_adaptive_only(const Setup& st) {
    const auto& sp = st.s;
    const double dt = st.dt;
    const AdaptiveGains gains(sp.iota, sp.k0, sp.k1);
    AdaptiveState a{sp.init.xi0, sp.init.chi0, sp.init.phi0, sp.init.theta0};
    auto yd_at = [&](double s) { return (st.kernels.g1_0 * st.eta.at(s)).value(); };
    RunOutput out = start_output(st, RunMode::adaptive_only);
    auto record = [&](double s) {
        RunRow r;
        r.t = s;
        r.yd = yd_at(s);
        r.e = r.yd - a.chi1_hat;
        r.theta_hat = a.theta_hat;
        r.pred_err = (dhat(a, gains) - d_from_eta(st.canonical.T, st.eta.at(s))).norm();
        out.rows.push_back(r);
    };
    record(0.0);
    for (long n = 0; n < st.n_steps; ++n) {
        a = adaptive_step(a, gains, yd_at(st.time(n)), dt, st.time(n + 1));
        if (st.export_due(n + 1)) {
            record(st.time(n + 1));
        }
    }
    out.w_final = st.grid.zeros();
    out.wt_final = st.grid.zeros();
    return out;
}

} // namespace detail

/// Runs one reduced or complete loop. Throws ConfigError for invalid scenarios, CflError and
/// NonFiniteError (with the first offending time) during integration.
[[nodiscard]] inline RunOutput run_mode(const ScenarioParams& s, RunMode mode, const RunOptions& opts = {}) {
    validate(s);
    const auto start = std::chrono::steady_clock::now();
    const detail::Setup st(s);
    RunOutput out;
    switch (mode) {
    case RunMode::observer_error:
        out = detail::run_observer_error(st, opts);
        break;
    case RunMode::adaptive_only:
        out = detail::run_adaptive_only(st);
        break;
    default:
        out = detail::run_plant_loop(st, mode, opts);
        break;
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

/// The complete output-feedback loop with its diagnostic columns.
[[nodiscard]] inline RunOutput run_closed_loop(const ScenarioParams& s) { return run_mode(s, RunMode::full); }

} // namespace wavereg
