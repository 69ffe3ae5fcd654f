#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "wavereg/errors.hpp"

namespace wavereg {

/// |y| ~ M e^{-mu t} on [t0, t1]; mu keeps its sign, so growth shows up as mu < 0.
struct DecayFit {
    double M = 0.0;
    double mu = 0.0;
    double t0 = 0.0;
    double t1 = 0.0;
    double residual = 0.0; ///< RMS of the log-space fit
    int n_peaks = 0;
};

namespace detail {

struct Peak {
    double t;
    double a;
};

/// Local maxima of |y| (>= left neighbour, > right neighbour, > 0).
inline std::vector<Peak> local_peaks(std::span<const double> t, std::span<const double> a) {
    std::vector<Peak> out;
    for (std::size_t i = 1; i + 1 < a.size(); ++i) {
        if (a[i] > 0.0 && a[i] >= a[i - 1] && a[i] > a[i + 1]) {
            out.push_back({t[i], a[i]});
        }
    }
    return out;
}

/// Maximum of |y| in each of `blocks` equal slices of the samples.
inline std::vector<Peak> block_peaks(std::span<const double> t, std::span<const double> a, int blocks) {
    std::vector<Peak> out;
    const std::size_t n = a.size();
    for (int b = 0; b < blocks; ++b) {
        const std::size_t lo = n * b / blocks;
        const std::size_t hi = n * (b + 1) / blocks;
        if (hi <= lo) {
            continue;
        }
        Peak best{t[lo], a[lo]};
        for (std::size_t i = lo; i < hi; ++i) {
            if (a[i] > best.a) {
                best = {t[i], a[i]};
            }
        }
        if (best.a > 0.0) {
            out.push_back(best);
        }
    }
    return out;
}

} // namespace detail

/// Least squares of log|peak| against t over the envelope peaks of y inside [t0, t1].
/// Oscillating series use their local maxima; monotone or flat ones fall back to block maxima.
[[nodiscard]] inline DecayFit fit_decay(std::span<const double> t, std::span<const double> y, double t0, double t1,
                                        int min_peaks = 5) {
    if (t.size() != y.size()) {
        throw ConfigError("fit_decay: time and value series differ in length");
    }
    std::vector<double> tw;
    std::vector<double> aw;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= t0 && t[i] <= t1 && std::isfinite(y[i])) {
            tw.push_back(t[i]);
            aw.push_back(std::abs(y[i]));
        }
    }
    auto peaks = detail::local_peaks(tw, aw);
    if (static_cast<int>(peaks.size()) < min_peaks) {
        peaks = detail::block_peaks(tw, aw, 10);
    }
    if (static_cast<int>(peaks.size()) < min_peaks) {
        throw InsufficientPeaksError("fit_decay: " + std::to_string(peaks.size()) + " envelope peaks in [" +
                                     std::to_string(t0) + ", " + std::to_string(t1) + "], need " +
                                     std::to_string(min_peaks));
    }
    const double n = static_cast<double>(peaks.size());
    double st = 0.0;
    double sl = 0.0;
    for (const auto& p : peaks) {
        st += p.t;
        sl += std::log(p.a);
    }
    const double tm = st / n;
    const double lm = sl / n;
    double stt = 0.0;
    double stl = 0.0;
    for (const auto& p : peaks) {
        stt += (p.t - tm) * (p.t - tm);
        stl += (p.t - tm) * (std::log(p.a) - lm);
    }
    const double slope = stt > 0.0 ? stl / stt : 0.0;
    const double intercept = lm - slope * tm;
    double rss = 0.0;
    for (const auto& p : peaks) {
        const double r = std::log(p.a) - (intercept + slope * p.t);
        rss += r * r;
    }
    return DecayFit{std::exp(intercept), -slope, t0, t1, std::sqrt(rss / n), static_cast<int>(peaks.size())};
}

} // namespace wavereg
