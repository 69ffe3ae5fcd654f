#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "wavereg/errors.hpp"

namespace wavereg {

/// Time-stamped scalar samples over a sliding retention window, linearly interpolated on lookup.
class HistoryBuffer {
public:
    struct Sample {
        double t;
        double value;
    };

    explicit HistoryBuffer(double retention) : retention_(retention) {}

    /// Appends a sample; timestamps must increase strictly. Samples older than
    /// latest - retention are dropped, keeping one at or before the window start.
    void push(double t, double value) {
        if (!samples_.empty() && !(t > samples_.back().t)) {
            throw HistorySpanError("history timestamps must increase strictly (got " + std::to_string(t) +
                                   " after " + std::to_string(samples_.back().t) + ")");
        }
        samples_.push_back({t, value});
        const double oldest_needed = t - retention_;
        while (samples_.size() > 2 && samples_[1].t <= oldest_needed) {
            samples_.pop_front();
        }
    }

    [[nodiscard]] double sample(double t_query) const {
        if (samples_.empty()) {
            throw HistorySpanError("history is empty");
        }
        const double tol = 1e-9 * std::max(1.0, std::abs(t_query));
        if (t_query < samples_.front().t - tol || t_query > samples_.back().t + tol) {
            throw HistorySpanError("history query t=" + std::to_string(t_query) + " outside stored span [" +
                                   std::to_string(samples_.front().t) + ", " + std::to_string(samples_.back().t) +
                                   "]");
        }
        auto it = std::lower_bound(samples_.begin(), samples_.end(), t_query,
                                   [](const Sample& s, double t) { return s.t < t; });
        if (it != samples_.end() && std::abs(it->t - t_query) <= tol) {
            return it->value;
        }
        if (it != samples_.begin() && std::abs(std::prev(it)->t - t_query) <= tol) {
            return std::prev(it)->value;
        }
        if (it == samples_.end()) {
            return samples_.back().value;
        }
        if (it == samples_.begin()) {
            return samples_.front().value;
        }
        const Sample& hi = *it;
        const Sample& lo = *std::prev(it);
        const double w = (t_query - lo.t) / (hi.t - lo.t);
        return (1.0 - w) * lo.value + w * hi.value;
    }

    [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] double front_time() const { return samples_.front().t; }
    [[nodiscard]] double back_time() const { return samples_.back().t; }
    [[nodiscard]] double retention() const noexcept { return retention_; }

private:
    double retention_;
    std::deque<Sample> samples_;
};

} // namespace wavereg
