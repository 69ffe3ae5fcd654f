#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wavereg/errors.hpp"
#include "wavereg/exosystem.hpp"
#include "wavereg/linalg.hpp"
#include "wavereg/plant.hpp"

namespace wavereg {

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? " " : "") + fmt_double(v[i]);
    }
    return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string tok;
    while (in >> tok) {
        out.push_back(tok);
    }
    return out;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> to_double(const std::string& tok) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) {
            return std::nullopt;
        }
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

/// Reads numeric CSV rows (comma or whitespace separated), skipping a non-numeric header line.
inline std::vector<std::vector<double>> read_numeric_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open table file '" + path.string() + "'");
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (char& c : line) {
            if (c == ',') {
                c = ' ';
            }
        }
        const auto toks = split_ws(line);
        if (toks.empty() || toks[0][0] == '#') {
            continue;
        }
        std::vector<double> row;
        for (const auto& t : toks) {
            const auto v = to_double(t);
            if (!v) {
                if (rows.empty() && row.empty()) {
                    break; // header
                }
                throw ParseError(path.string(), lineno, "non-numeric entry '" + t + "'");
            }
            row.push_back(*v);
        }
        if (!row.empty()) {
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace detail

/// Scalar initial field on [0, 1], written in scenario files as `<kind> <args...>`:
/// `zero`, `const c`, `cosbump A` (A (cos 2 pi x - 1)), `poly c0 c1 ...`, `table file.csv`.
class FieldSpec {
public:
    enum class Kind { zero, constant, cosbump, poly, table };

    FieldSpec() = default;

    [[nodiscard]] static FieldSpec zero() { return {}; }
    [[nodiscard]] static FieldSpec constant(double c) { return FieldSpec(Kind::constant, {c}); }
    [[nodiscard]] static FieldSpec cosbump(double amplitude) { return FieldSpec(Kind::cosbump, {amplitude}); }
    [[nodiscard]] static FieldSpec poly(std::vector<double> c) { return FieldSpec(Kind::poly, std::move(c)); }

    [[nodiscard]] static FieldSpec parse(std::string_view text, const std::filesystem::path& base_dir) {
        const auto toks = detail::split_ws(text);
        if (toks.empty()) {
            throw ConfigError("empty field specification");
        }
        const std::string& kind = toks[0];
        std::vector<double> args;
        if (kind != "table") {
            for (std::size_t i = 1; i < toks.size(); ++i) {
                const auto v = detail::to_double(toks[i]);
                if (!v) {
                    throw ConfigError("field specification '" + std::string(text) + "': bad number '" + toks[i] + "'");
                }
                args.push_back(*v);
            }
        }
        auto need = [&](std::size_t n) {
            if (args.size() != n) {
                throw ConfigError("field specification '" + std::string(text) + "' expects " + std::to_string(n) +
                                  " argument(s)");
            }
        };
        if (kind == "zero") {
            need(0);
            return zero();
        }
        if (kind == "const") {
            need(1);
            return constant(args[0]);
        }
        if (kind == "cosbump") {
            need(1);
            return cosbump(args[0]);
        }
        if (kind == "poly") {
            if (args.empty()) {
                throw ConfigError("field specification 'poly' needs coefficients");
            }
            return poly(std::move(args));
        }
        if (kind == "table") {
            if (toks.size() != 2) {
                throw ConfigError("field specification 'table' expects one path");
            }
            FieldSpec f(Kind::table, {});
            f.path_ = toks[1];
            const auto rows = detail::read_numeric_table(base_dir / f.path_);
            for (const auto& r : rows) {
                if (r.size() != 2) {
                    throw ConfigError("field table '" + f.path_ + "' rows must be (x, value)");
                }
                f.tx_.push_back(r[0]);
                f.tv_.push_back(r[1]);
            }
            if (f.tx_.size() < 2) {
                throw ConfigError("field table '" + f.path_ + "' needs at least two rows");
            }
            return f;
        }
        throw ConfigError("unknown field kind '" + kind + "'");
    }

    [[nodiscard]] double operator()(double x) const {
        switch (kind_) {
        case Kind::zero:
            return 0.0;
        case Kind::constant:
            return args_[0];
        case Kind::cosbump:
            return args_[0] * (std::cos(2.0 * std::numbers::pi * x) - 1.0);
        case Kind::poly: {
            double acc = 0.0;
            for (auto it = args_.rbegin(); it != args_.rend(); ++it) {
                acc = acc * x + *it;
            }
            return acc;
        }
        case Kind::table: {
            auto it = std::upper_bound(tx_.begin(), tx_.end(), x);
            if (it == tx_.begin()) {
                return tv_.front();
            }
            if (it == tx_.end()) {
                return tv_.back();
            }
            const auto i = static_cast<std::size_t>(it - tx_.begin());
            const double w = (x - tx_[i - 1]) / (tx_[i] - tx_[i - 1]);
            return (1.0 - w) * tv_[i - 1] + w * tv_[i];
        }
        }
        return 0.0;
    }

    [[nodiscard]] std::string to_string() const {
        switch (kind_) {
        case Kind::zero:
            return "zero";
        case Kind::constant:
            return "const " + detail::fmt_double(args_[0]);
        case Kind::cosbump:
            return "cosbump " + detail::fmt_double(args_[0]);
        case Kind::poly:
            return "poly " + detail::join_doubles(args_);
        case Kind::table:
            return "table " + path_;
        }
        return "zero";
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

    friend bool operator==(const FieldSpec&, const FieldSpec&) = default;

private:
    FieldSpec(Kind k, std::vector<double> a) : kind_(k), args_(std::move(a)) {}

    Kind kind_ = Kind::zero;
    std::vector<double> args_;
    std::string path_;
    std::vector<double> tx_;
    std::vector<double> tv_;
};

struct NumericsParams {
    int n_cells = 200;
    double cfl_factor = 0.5;
    double t_final = 60.0;
    int predictor_stride = 1;
    int export_stride = 10;

    friend bool operator==(const NumericsParams&, const NumericsParams&) = default;
};

struct InitialConditions {
    FieldSpec w0;
    FieldSpec w1;
    FieldSpec zhat0;
    FieldSpec zhat_s0;
    FieldSpec Y2hat0;
    FieldSpec Y10;
    double xi0 = 0.0;
    double chi0 = 0.0;
    double phi0 = 0.0;
    double theta0 = 0.0;

    friend bool operator==(const InitialConditions&, const InitialConditions&) = default;
};

/// Every constant of one closed-loop experiment.
struct ScenarioParams {
    std::string name = "scenario";
    PlantParams plant;
    Mat2 S = Mat2::Zero();
    Vec2 v0 = Vec2::Zero();
    Row2 p4 = Row2::Zero();
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double iota = 0.0;
    double k0 = 0.0;
    double k1 = 0.0;
    NumericsParams numerics;
    InitialConditions init;

    [[nodiscard]] double dt() const { return numerics.cfl_factor / numerics.n_cells; }
    [[nodiscard]] ExoParams exo() const { return ExoParams(S, v0, p4); }

    friend bool operator==(const ScenarioParams& a, const ScenarioParams& b) {
        return a.name == b.name && a.plant.q == b.plant.q && a.plant.tau == b.plant.tau &&
               a.plant.p1 == b.plant.p1 && a.plant.p2 == b.plant.p2 && a.plant.p3 == b.plant.p3 && a.S == b.S &&
               a.v0 == b.v0 && a.p4 == b.p4 && a.c0 == b.c0 && a.c1 == b.c1 && a.c2 == b.c2 && a.iota == b.iota &&
               a.k0 == b.k0 && a.k1 == b.k1 && a.numerics == b.numerics && a.init == b.init;
    }
};

/// Checks the closed-loop hypotheses and numerical preconditions; the message names the first
/// violated one.
inline void validate(const ScenarioParams& s) {
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw ConfigError(std::string("scenario hypothesis violated: ") + what);
        }
    };
    require(s.plant.q > 0.0, "q > 0");
    require(s.plant.tau >= 0.0, "tau >= 0");
    require(s.c0 > 0.0, "c0 > 0");
    require(s.c1 > 0.0, "c1 > 0");
    require(s.c2 > 0.0 && s.c2 < 1.0, "0 < c2 < 1");
    require(s.iota > 0.0, "iota > 0");
    require(s.k0 > 1.0 / (4.0 * s.iota), "k0 > 1/(4 iota)");
    require(s.k1 > 0.0, "k1 > 0");
    require(std::abs(s.S.trace()) <= 1e-12 * std::max(1.0, s.S.norm()) && s.S.determinant() > 0.0,
            "eigenvalues of S are +-i omega (trace S = 0, det S > 0)");
    require(s.numerics.n_cells >= 3, "n_cells >= 3");
    require(s.numerics.cfl_factor > 0.0 && s.numerics.cfl_factor <= 1.0, "0 < cfl_factor <= 1");
    require(s.numerics.t_final > 0.0, "t_final > 0");
    require(s.numerics.predictor_stride >= 1, "predictor_stride >= 1");
    require(s.numerics.export_stride >= 1, "export_stride >= 1");
}

namespace detail {

inline std::string row_text(const Row2& r) { return fmt_double(r(0)) + " " + fmt_double(r(1)); }

} // namespace detail

/// Flat `section.key = value` text, the on-disk scenario format.
[[nodiscard]] inline std::string to_text(const ScenarioParams& s) {
    using detail::fmt_double;
    using detail::row_text;
    std::ostringstream o;
    o << "name = " << s.name << "\n";
    o << "plant.q = " << fmt_double(s.plant.q) << "\n";
    o << "plant.tau = " << fmt_double(s.plant.tau) << "\n";
    if (s.plant.p1.kind() == InDomainProfile::Kind::polynomial) {
        o << "plant.p1.poly = " << detail::join_doubles(s.plant.p1.coeffs()) << "\n";
        o << "plant.p1.dir = " << row_text(s.plant.p1.direction()) << "\n";
    } else {
        o << "plant.p1.table = " << s.plant.p1.source() << "\n";
    }
    o << "plant.p2 = " << row_text(s.plant.p2) << "\n";
    o << "plant.p3 = " << row_text(s.plant.p3) << "\n";
    o << "exo.S = " << fmt_double(s.S(0, 0)) << " " << fmt_double(s.S(0, 1)) << " " << fmt_double(s.S(1, 0)) << " "
      << fmt_double(s.S(1, 1)) << "\n";
    o << "exo.v0 = " << fmt_double(s.v0(0)) << " " << fmt_double(s.v0(1)) << "\n";
    o << "exo.p4 = " << row_text(s.p4) << "\n";
    o << "control.c0 = " << fmt_double(s.c0) << "\n";
    o << "control.c1 = " << fmt_double(s.c1) << "\n";
    o << "control.c2 = " << fmt_double(s.c2) << "\n";
    o << "adaptive.iota = " << fmt_double(s.iota) << "\n";
    o << "adaptive.k0 = " << fmt_double(s.k0) << "\n";
    o << "adaptive.k1 = " << fmt_double(s.k1) << "\n";
    o << "adaptive.xi0 = " << fmt_double(s.init.xi0) << "\n";
    o << "adaptive.chi0 = " << fmt_double(s.init.chi0) << "\n";
    o << "adaptive.phi0 = " << fmt_double(s.init.phi0) << "\n";
    o << "adaptive.theta0 = " << fmt_double(s.init.theta0) << "\n";
    o << "numerics.n_cells = " << s.numerics.n_cells << "\n";
    o << "numerics.cfl_factor = " << fmt_double(s.numerics.cfl_factor) << "\n";
    o << "numerics.t_final = " << fmt_double(s.numerics.t_final) << "\n";
    o << "numerics.predictor_stride = " << s.numerics.predictor_stride << "\n";
    o << "numerics.export_stride = " << s.numerics.export_stride << "\n";
    o << "init.w0 = " << s.init.w0.to_string() << "\n";
    o << "init.w1 = " << s.init.w1.to_string() << "\n";
    o << "observer.zhat0 = " << s.init.zhat0.to_string() << "\n";
    o << "observer.zhat_s0 = " << s.init.zhat_s0.to_string() << "\n";
    o << "observer.Y2hat0 = " << s.init.Y2hat0.to_string() << "\n";
    o << "observer.Y10 = " << s.init.Y10.to_string() << "\n";
    return o.str();
}

/// Parses scenario text. `origin` names the source in error messages; sidecar tables are
/// resolved against `base_dir`.
[[nodiscard]] inline ScenarioParams parse_scenario(std::string_view text, const std::string& origin,
                                                   const std::filesystem::path& base_dir) {
    struct Entry {
        std::string value;
        int line;
        bool used = false;
    };
    std::map<std::string, Entry> kv;
    {
        std::istringstream in{std::string(text)};
        std::string raw;
        int lineno = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            const auto hash = raw.find('#');
            const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (line.empty()) {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ParseError(origin, lineno, "expected 'key = value'");
            }
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string value = detail::trim(line.substr(eq + 1));
            if (key.empty()) {
                throw ParseError(origin, lineno, "empty key");
            }
            if (kv.count(key)) {
                throw ParseError(origin, lineno, "duplicate field '" + key + "'");
            }
            kv[key] = Entry{value, lineno};
        }
    }

    auto find = [&](const std::string& key) -> Entry* {
        auto it = kv.find(key);
        if (it == kv.end()) {
            return nullptr;
        }
        it->second.used = true;
        return &it->second;
    };
    auto required = [&](const std::string& key) -> Entry& {
        Entry* e = find(key);
        if (!e) {
            throw ParseError(origin, 0, "missing field '" + key + "'");
        }
        return *e;
    };
    auto numbers = [&](const Entry& e, const std::string& key, std::size_t n) {
        const auto toks = detail::split_ws(e.value);
        std::vector<double> out;
        for (const auto& t : toks) {
            const auto v = detail::to_double(t);
            if (!v) {
                throw ParseError(origin, e.line, "field '" + key + "': bad number '" + t + "'");
            }
            out.push_back(*v);
        }
        if (n != 0 && out.size() != n) {
            throw ParseError(origin, e.line,
                             "field '" + key + "' expects " + std::to_string(n) + " number(s), got " +
                                 std::to_string(out.size()));
        }
        return out;
    };
    auto scalar = [&](const std::string& key) { return numbers(required(key), key, 1)[0]; };
    auto scalar_or = [&](const std::string& key, double dflt) {
        Entry* e = find(key);
        return e ? numbers(*e, key, 1)[0] : dflt;
    };
    auto integer_or = [&](const std::string& key, int dflt) {
        Entry* e = find(key);
        if (!e) {
            return dflt;
        }
        const double v = numbers(*e, key, 1)[0];
        if (v != std::floor(v)) {
            throw ParseError(origin, e->line, "field '" + key + "' must be an integer");
        }
        return static_cast<int>(v);
    };
    auto row = [&](const std::string& key) {
        const auto v = numbers(required(key), key, 2);
        return Row2(v[0], v[1]);
    };
    auto field_or = [&](const std::string& key, const FieldSpec& dflt) {
        Entry* e = find(key);
        if (!e) {
            return dflt;
        }
        try {
            return FieldSpec::parse(e->value, base_dir);
        } catch (const ParseError&) {
            throw;
        } catch (const ConfigError& err) {
            throw ParseError(origin, e->line, "field '" + key + "': " + err.what());
        }
    };

    ScenarioParams s;
    if (Entry* e = find("name")) {
        s.name = e->value;
    }
    s.plant.q = scalar("plant.q");
    s.plant.tau = scalar("plant.tau");
    Entry* poly = find("plant.p1.poly");
    Entry* table = find("plant.p1.table");
    if (poly && table) {
        throw ParseError(origin, table->line, "give either 'plant.p1.poly' or 'plant.p1.table', not both");
    }
    if (poly) {
        const auto coeffs = numbers(*poly, "plant.p1.poly", 0);
        if (coeffs.empty()) {
            throw ParseError(origin, poly->line, "field 'plant.p1.poly' needs coefficients");
        }
        s.plant.p1 = InDomainProfile::polynomial(coeffs, row("plant.p1.dir"));
    } else if (table) {
        const auto rows = detail::read_numeric_table(base_dir / table->value);
        std::vector<double> xs;
        std::vector<Row2> vals;
        for (const auto& r : rows) {
            if (r.size() != 3) {
                throw ParseError(origin, table->line, "p1 table rows must be (x, a, b)");
            }
            xs.push_back(r[0]);
            vals.emplace_back(r[1], r[2]);
        }
        try {
            s.plant.p1 = InDomainProfile::table(std::move(xs), std::move(vals), table->value);
        } catch (const ConfigError& err) {
            throw ParseError(origin, table->line, err.what());
        }
    } else {
        throw ParseError(origin, 0, "missing field 'plant.p1.poly' (or 'plant.p1.table')");
    }
    s.plant.p2 = row("plant.p2");
    s.plant.p3 = row("plant.p3");
    {
        const auto m = numbers(required("exo.S"), "exo.S", 4);
        s.S << m[0], m[1], m[2], m[3];
        const auto v = numbers(required("exo.v0"), "exo.v0", 2);
        s.v0 = Vec2(v[0], v[1]);
        s.p4 = row("exo.p4");
    }
    s.c0 = scalar("control.c0");
    s.c1 = scalar("control.c1");
    s.c2 = scalar("control.c2");
    s.iota = scalar("adaptive.iota");
    s.k0 = scalar("adaptive.k0");
    s.k1 = scalar("adaptive.k1");
    s.init.xi0 = scalar_or("adaptive.xi0", 0.0);
    s.init.chi0 = scalar_or("adaptive.chi0", 0.0);
    s.init.phi0 = scalar_or("adaptive.phi0", 0.0);
    s.init.theta0 = scalar_or("adaptive.theta0", 0.0);
    s.numerics.n_cells = integer_or("numerics.n_cells", s.numerics.n_cells);
    s.numerics.cfl_factor = scalar_or("numerics.cfl_factor", s.numerics.cfl_factor);
    s.numerics.t_final = scalar_or("numerics.t_final", s.numerics.t_final);
    s.numerics.predictor_stride = integer_or("numerics.predictor_stride", s.numerics.predictor_stride);
    s.numerics.export_stride = integer_or("numerics.export_stride", s.numerics.export_stride);
    s.init.w0 = field_or("init.w0", FieldSpec::zero());
    s.init.w1 = field_or("init.w1", FieldSpec::zero());
    s.init.zhat0 = field_or("observer.zhat0", s.init.w0);
    s.init.zhat_s0 = field_or("observer.zhat_s0", FieldSpec::zero());
    s.init.Y2hat0 = field_or("observer.Y2hat0", FieldSpec::constant(-s.c2));
    s.init.Y10 = field_or("observer.Y10", FieldSpec::zero());

    for (const auto& [key, e] : kv) {
        if (!e.used) {
            throw ParseError(origin, e.line, "unknown field '" + key + "'");
        }
    }
    validate(s);
    return s;
}

[[nodiscard]] inline ScenarioParams load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario file '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string(), path.parent_path());
}

inline void save_scenario(const ScenarioParams& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write scenario file '" + path.string() + "'");
    }
    out << to_text(s);
}

/// Benchmark loop: q = 1, p1 = 2x, p4 = 2, S = [[0, 0.25], [-1, 0]],
/// c0 = 200, c1 = 1, c2 = 0.1, k0 = 5, k1 = 10, iota = 1, w0 = 10 (cos 2 pi x - 1).
/// v0 = (0, 2) makes p1 v = 2x sin(0.5 t) and y_ref = 2 sin(0.5 t).
[[nodiscard]] inline ScenarioParams benchmark_scenario(double tau) {
    ScenarioParams s;
    s.plant.q = 1.0;
    s.plant.tau = tau;
    s.plant.p1 = InDomainProfile::polynomial({0.0, 2.0}, Row2(1.0, 0.0));
    s.plant.p2 = Row2::Zero();
    s.plant.p3 = Row2::Zero();
    s.S << 0.0, 0.25, -1.0, 0.0;
    s.v0 = Vec2(0.0, 2.0);
    s.p4 = Row2(2.0, 0.0);
    s.c0 = 200.0;
    s.c1 = 1.0;
    s.c2 = 0.1;
    s.iota = 1.0;
    s.k0 = 5.0;
    s.k1 = 10.0;
    s.numerics.t_final = tau <= 0.1 ? 60.0 : 100.0;
    s.init.w0 = FieldSpec::cosbump(10.0);
    s.init.zhat0 = s.init.w0;
    s.init.Y2hat0 = FieldSpec::constant(-s.c2);
    char tag[32];
    std::snprintf(tag, sizeof tag, "%g", tau);
    s.name = "sec4_tau";
    for (const char* c = tag; *c; ++c) {
        if (*c != '.') {
            s.name += *c;
        }
    }
    return s;
}

} // namespace wavereg
