#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "wavereg/errors.hpp"
#include "wavereg/linalg.hpp"

namespace wavereg {

/// In-domain disturbance coefficient p1(x), a 1x2 row vector per point.
/// Either polynomial(x) * direction, or a table linearly interpolated in x.
class InDomainProfile {
public:
    enum class Kind { polynomial, table };

    InDomainProfile() = default;

    [[nodiscard]] static InDomainProfile polynomial(std::vector<double> coeffs, const Row2& direction) {
        InDomainProfile p;
        p.kind_ = Kind::polynomial;
        p.coeffs_ = std::move(coeffs);
        p.direction_ = direction;
        return p;
    }

    /// Table rows (x, a, b) with x strictly increasing, covering [0, 1].
    [[nodiscard]] static InDomainProfile table(std::vector<double> x, std::vector<Row2> values, std::string source) {
        if (x.size() < 2 || x.size() != values.size()) {
            throw ConfigError("p1 table needs at least two rows of (x, a, b)");
        }
        for (std::size_t i = 1; i < x.size(); ++i) {
            if (!(x[i] > x[i - 1])) {
                throw ConfigError("p1 table x column must increase strictly");
            }
        }
        if (x.front() > 0.0 || x.back() < 1.0) {
            throw ConfigError("p1 table must cover [0, 1]");
        }
        InDomainProfile p;
        p.kind_ = Kind::table;
        p.table_x_ = std::move(x);
        p.table_values_ = std::move(values);
        p.source_ = std::move(source);
        return p;
    }

    [[nodiscard]] Row2 operator()(double x) const {
        if (kind_ == Kind::polynomial) {
            double acc = 0.0;
            for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
                acc = acc * x + *it;
            }
            return acc * direction_;
        }
        auto it = std::upper_bound(table_x_.begin(), table_x_.end(), x);
        if (it == table_x_.begin()) {
            return table_values_.front();
        }
        if (it == table_x_.end()) {
            return table_values_.back();
        }
        const auto i = static_cast<std::size_t>(it - table_x_.begin());
        const double w = (x - table_x_[i - 1]) / (table_x_[i] - table_x_[i - 1]);
        return (1.0 - w) * table_values_[i - 1] + w * table_values_[i];
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::vector<double>& coeffs() const noexcept { return coeffs_; }
    [[nodiscard]] const Row2& direction() const noexcept { return direction_; }
    [[nodiscard]] const std::vector<double>& table_x() const noexcept { return table_x_; }
    [[nodiscard]] const std::vector<Row2>& table_values() const noexcept { return table_values_; }
    [[nodiscard]] const std::string& source() const noexcept { return source_; }

    friend bool operator==(const InDomainProfile& a, const InDomainProfile& b) {
        return a.kind_ == b.kind_ && a.coeffs_ == b.coeffs_ && a.direction_ == b.direction_ &&
               a.table_x_ == b.table_x_ && a.table_values_ == b.table_values_ && a.source_ == b.source_;
    }

private:
    Kind kind_ = Kind::polynomial;
    std::vector<double> coeffs_;
    Row2 direction_ = Row2::Zero();
    std::vector<double> table_x_;
    std::vector<Row2> table_values_;
    std::string source_;
};

/// Plant constants: anti-damping q, output delay tau, disturbance coefficients p1..p3.
struct PlantParams {
    double q = 1.0;
    double tau = 0.0;
    InDomainProfile p1;
    Row2 p2 = Row2::Zero();
    Row2 p3 = Row2::Zero();
};

} // namespace wavereg
