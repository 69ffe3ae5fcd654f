#pragma once

#include <cmath>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "wavereg/linalg.hpp"

namespace wavereg::testing {

/// Adaptive Dormand-Prince solution of y' = f(x, y) sampled at `xs` (increasing, xs[0] = start).
template <class F>
std::vector<std::vector<double>> dopri_samples(F f, std::vector<double> y0, const std::vector<double>& xs,
                                               double tol = 1e-13) {
    namespace ode = boost::numeric::odeint;
    using State = std::vector<double>;
    std::vector<State> out;
    auto stepper = ode::make_dense_output(tol, tol, ode::runge_kutta_dopri5<State>());
    ode::integrate_times(
        stepper, [&](const State& y, State& dy, double x) { f(y, dy, x); }, y0, xs.begin(), xs.end(), 1e-4,
        [&](const State& y, double) { out.push_back(y); });
    return out;
}

inline double order(double coarse, double fine, double ratio = 2.0) { return std::log(coarse / fine) / std::log(ratio); }

} // namespace wavereg::testing
