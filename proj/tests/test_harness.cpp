#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "wavereg/decay_fit.hpp"
#include "wavereg/export.hpp"
#include "wavereg/scenario.hpp"
#include "wavereg/simulation.hpp"

using namespace wavereg;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarioDir = WAVEREG_SCENARIO_DIR;

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string bundled_text() { return read_file(kScenarioDir / "sec4_tau01.scn"); }

/// Message of the ConfigError raised while parsing `text`, or empty.
std::string parse_message(const std::string& text) {
    try {
        (void)parse_scenario(text, "test.scn", kScenarioDir);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

std::string replace_line(std::string text, const std::string& key, const std::string& value) {
    const auto pos = text.find("\n" + key + " =");
    REQUIRE(pos != std::string::npos);
    const auto end = text.find('\n', pos + 1);
    return text.substr(0, pos + 1) + key + " = " + value + text.substr(end);
}

std::string drop_line(std::string text, const std::string& key) {
    const auto pos = text.find("\n" + key + " =");
    REQUIRE(pos != std::string::npos);
    const auto end = text.find('\n', pos + 1);
    return text.substr(0, pos) + text.substr(end);
}

fs::path temp_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("wavereg_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

} // namespace

TEST_CASE("field specifications parse, evaluate and print back", "[scenario]") {
    const fs::path base = kScenarioDir;
    for (const std::string text : {"zero", "const -0.1", "cosbump 10", "poly 1 -2 0.5"}) {
        const FieldSpec f = FieldSpec::parse(text, base);
        CHECK(FieldSpec::parse(f.to_string(), base) == f);
    }
    CHECK(FieldSpec::parse("zero", base)(0.3) == 0.0);
    CHECK(FieldSpec::parse("const 2.5", base)(0.7) == 2.5);
    CHECK_THAT(FieldSpec::parse("cosbump 10", base)(0.5), WithinAbs(-20.0, 1e-12));
    CHECK_THAT(FieldSpec::parse("poly 1 -2 0.5", base)(2.0), WithinAbs(1.0 - 4.0 + 2.0, 1e-15));
    CHECK_THROWS_AS(FieldSpec::parse("wiggle 3", base), ConfigError);
    CHECK_THROWS_AS(FieldSpec::parse("const", base), ConfigError);
    CHECK_THROWS_AS(FieldSpec::parse("const x", base), ConfigError);
}

TEST_CASE("tabulated fields interpolate linearly", "[scenario]") {
    const fs::path d = temp_dir("table");
    {
        std::ofstream out(d / "f.csv");
        out << "x,value\n0,0\n0.5,1\n1,3\n";
    }
    const FieldSpec f = FieldSpec::parse("table f.csv", d);
    CHECK_THAT(f(0.25), WithinAbs(0.5, 1e-15));
    CHECK_THAT(f(0.75), WithinAbs(2.0, 1e-15));
    CHECK(f.to_string() == "table f.csv");
    fs::remove_all(d);
}

TEST_CASE("bundled benchmark scenarios equal the built-in factory", "[scenario]") {
    CHECK(load_scenario(kScenarioDir / "sec4_tau01.scn") == benchmark_scenario(0.1));
    CHECK(load_scenario(kScenarioDir / "sec4_tau05.scn") == benchmark_scenario(0.5));
    CHECK(load_scenario(kScenarioDir / "sec4_tau1.scn") == benchmark_scenario(1.0));
    const ScenarioParams z = load_scenario(kScenarioDir / "sec4_tau01_w0zero.scn");
    CHECK(z.init.w0 == FieldSpec::zero());
    CHECK(z.init.zhat0 == FieldSpec::zero());
    CHECK(z.plant.tau == 0.1);
}

TEST_CASE("scenario save and load round trip", "[scenario]") {
    const fs::path d = temp_dir("roundtrip");
    ScenarioParams s = benchmark_scenario(0.5);
    s.name = "custom";
    s.numerics.n_cells = 123;
    s.init.w1 = FieldSpec::poly({0.1, 0.2});
    s.init.theta0 = 0.125;
    save_scenario(s, d / "custom.scn");
    CHECK(load_scenario(d / "custom.scn") == s);
    CHECK(parse_scenario(to_text(s), "mem", d) == s);
    fs::remove_all(d);
}

TEST_CASE("scenario parse errors carry the line", "[scenario]") {
    const std::string base = bundled_text();
    SECTION("unknown key") {
        const std::string text = base + "control.c3 = 1\n";
        try {
            (void)parse_scenario(text, "test.scn", kScenarioDir);
            FAIL("accepted an unknown key");
        } catch (const ParseError& e) {
            CHECK_THAT(std::string(e.what()), ContainsSubstring("unknown field 'control.c3'"));
            CHECK(e.line() == static_cast<int>(std::count(text.begin(), text.end(), '\n')));
        }
    }
    SECTION("duplicate key") {
        CHECK_THAT(parse_message(base + "plant.q = 2\n"), ContainsSubstring("duplicate field 'plant.q'"));
    }
    SECTION("missing key") {
        CHECK_THAT(parse_message(drop_line(base, "control.c1")), ContainsSubstring("missing field 'control.c1'"));
    }
    SECTION("malformed line and number") {
        CHECK_THAT(parse_message(base + "just words\n"), ContainsSubstring("expected 'key = value'"));
        CHECK_THAT(parse_message(replace_line(base, "control.c0", "2x")), ContainsSubstring("bad number"));
        CHECK_THAT(parse_message(replace_line(base, "exo.v0", "1")), ContainsSubstring("expects 2 number"));
        CHECK_THAT(parse_message(replace_line(base, "numerics.n_cells", "10.5")), ContainsSubstring("integer"));
    }
}

TEST_CASE("scenario hypotheses are checked by name", "[scenario]") {
    const std::string base = bundled_text();
    const std::vector<std::pair<std::pair<std::string, std::string>, std::string>> cases = {
        {{"adaptive.k0", "0.1"}, "k0 > 1/(4 iota)"},
        {{"plant.q", "0"}, "q > 0"},
        {{"plant.tau", "-0.1"}, "tau >= 0"},
        {{"control.c0", "0"}, "c0 > 0"},
        {{"control.c1", "-1"}, "c1 > 0"},
        {{"control.c2", "1"}, "0 < c2 < 1"},
        {{"control.c2", "0"}, "0 < c2 < 1"},
        {{"adaptive.iota", "0"}, "iota > 0"},
        {{"adaptive.k1", "0"}, "k1 > 0"},
        {{"exo.S", "0.1 0.25 -1 0"}, "eigenvalues of S"},
        {{"exo.S", "0 1 1 0"}, "eigenvalues of S"},
        {{"numerics.n_cells", "2"}, "n_cells >= 3"},
        {{"numerics.cfl_factor", "1.5"}, "0 < cfl_factor <= 1"},
        {{"numerics.t_final", "0"}, "t_final > 0"},
    };
    for (const auto& [edit, name] : cases) {
        INFO(edit.first << " = " << edit.second);
        CHECK_THAT(parse_message(replace_line(base, edit.first, edit.second)),
                   ContainsSubstring("scenario hypothesis violated: " + name));
    }
    CHECK(parse_message(base).empty());
}

TEST_CASE("run modes parse by name", "[harness]") {
    for (RunMode m : {RunMode::open_loop, RunMode::state_feedback, RunMode::observer_error, RunMode::adaptive_only,
                      RunMode::full}) {
        CHECK(parse_run_mode(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_run_mode("closed"), ConfigError);
}

TEST_CASE("decay fit", "[fit]") {
    std::vector<double> t;
    for (int k = 0; k <= 4000; ++k) {
        t.push_back(0.005 * k);
    }
    auto series = [&](auto f) {
        std::vector<double> y;
        for (double s : t) {
            y.push_back(f(s));
        }
        return y;
    };
    SECTION("damped oscillation") {
        const auto y = series([](double s) { return 3.0 * std::exp(-0.5 * s) * std::cos(10.0 * s); });
        const DecayFit f = fit_decay(t, y, 0.0, 20.0);
        CHECK_THAT(f.mu, WithinAbs(0.5, 0.02));
        CHECK_THAT(f.M, WithinAbs(3.0, 0.3));
        CHECK(f.n_peaks >= 20);
    }
    SECTION("constant") {
        const auto y = series([](double) { return 1.7; });
        CHECK_THAT(fit_decay(t, y, 0.0, 20.0).mu, WithinAbs(0.0, 0.01));
    }
    SECTION("growth has negative mu") {
        const auto y = series([](double s) { return std::exp(0.3 * s); });
        CHECK_THAT(fit_decay(t, y, 0.0, 20.0).mu, WithinAbs(-0.3, 0.02));
    }
    SECTION("window restricts the fit") {
        const auto y = series([](double s) { return (s < 10.0 ? 1.0 : std::exp(-(s - 10.0))) * std::sin(6.0 * s); });
        CHECK_THAT(fit_decay(t, y, 10.0, 20.0).mu, WithinAbs(1.0, 0.05));
    }
    SECTION("too few peaks") {
        const auto y = series([](double s) { return std::sin(s); });
        CHECK_THROWS_AS(fit_decay(t, y, 0.0, 0.02), InsufficientPeaksError);
        CHECK_THROWS_AS(fit_decay(t, y, 0.0, 20.0, 50), InsufficientPeaksError);
    }
    SECTION("length mismatch") {
        CHECK_THROWS_AS(fit_decay(t, std::vector<double>(3, 1.0), 0.0, 1.0), ConfigError);
    }
}

TEST_CASE("CSV export", "[export]") {
    ScenarioParams s = benchmark_scenario(0.1);
    s.numerics.t_final = 1.0;
    s.numerics.n_cells = 40;
    const RunOutput full = run_mode(s, RunMode::full);
    std::ostringstream out;
    export_csv(full, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == kCsvHeader);
    std::getline(in, line);
    // diagnostics start once the delay has passed: the first row leaves them empty
    CHECK(line.substr(line.size() - 2) == ",,");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 9);
    }
    CHECK(rows + 1 == static_cast<int>(full.rows.size()));

    const fs::path d = temp_dir("export");
    export_run(full, d);
    const CsvTable table = read_csv(d / "series.csv");
    CHECK(table.header.size() == 10);
    CHECK(table.column("t").size() == full.rows.size());
    CHECK(std::isnan(table.column("pred_err").front()));
    CHECK_THAT(table.column("e").back(), WithinAbs(full.rows.back().e, 1e-11 * std::max(1.0, std::abs(full.rows.back().e))));
    CHECK(fs::exists(d / "final_fields.csv"));
    const std::string meta = read_file(d / "meta.json");
    CHECK_THAT(meta, ContainsSubstring("\"mode\": \"full\""));
    CHECK_THAT(meta, ContainsSubstring("\"n_cells\": 40"));
    {
        std::ofstream bad(d / "bad.csv");
        bad << "a,b\n1,2\n3\n";
    }
    CHECK_THROWS_AS(read_csv(d / "bad.csv"), ParseError);
    CHECK_THROWS_AS(table.column("nope"), ConfigError);
    fs::remove_all(d);
}

TEST_CASE("zero data and zero reference keep the loop at rest", "[harness]") {
    ScenarioParams s = benchmark_scenario(0.1);
    s.v0.setZero();
    s.init.w0 = FieldSpec::zero();
    s.init.zhat0 = FieldSpec::zero();
    s.init.Y2hat0 = FieldSpec::zero();
    s.numerics.t_final = 5.0;
    s.numerics.n_cells = 50;
    const RunOutput out = run_mode(s, RunMode::full);
    for (const auto& r : out.rows) {
        CHECK(std::abs(r.e) <= 1e-12);
        CHECK(std::abs(r.u) <= 1e-12);
        CHECK(std::abs(r.theta_hat) <= 1e-12);
    }
}

TEST_CASE("runs are deterministic", "[harness]") {
    ScenarioParams s = benchmark_scenario(0.1);
    s.numerics.t_final = 3.0;
    s.numerics.n_cells = 60;
    std::ostringstream a;
    std::ostringstream b;
    export_csv(run_mode(s, RunMode::full), a);
    export_csv(run_mode(s, RunMode::full), b);
    CHECK(a.str() == b.str());
    RunOptions o;
    o.seed = 11;
    std::ostringstream c;
    std::ostringstream d;
    export_csv(run_mode(s, RunMode::observer_error, o), c);
    export_csv(run_mode(s, RunMode::observer_error, o), d);
    CHECK(c.str() == d.str());
    CHECK(scenario_hash(s) == scenario_hash(s));
    ScenarioParams t = s;
    t.c1 = 2.0;
    CHECK(scenario_hash(s) != scenario_hash(t));
}

TEST_CASE("open loop with unit anti-damping grows linearly", "[harness][open_loop]") {
    // with q = 1, I = int (1 - x) w_t dx is conserved and w = I' t (1 - x) is the growing part
    ScenarioParams s = benchmark_scenario(0.1);
    s.v0.setZero();
    s.init.w0 = FieldSpec::cosbump(1.0);
    s.init.w1 = FieldSpec::constant(1.0);
    s.numerics.t_final = 10.0;
    const RunOutput out = run_mode(s, RunMode::open_loop);
    CHECK(out.rows.back().energy_plant / out.rows.front().energy_plant >= 10.0);
    for (const auto& r : out.rows) {
        CHECK(r.u == 0.0);
    }
}

TEST_CASE("open loop with stronger anti-damping grows exponentially", "[harness][open_loop]") {
    // the unstable eigenvalue sigma solves tanh(sigma) = sigma / q; energy grows like e^{2 sigma t}
    const double q = 2.0;
    double sigma = 1.9;
    for (int k = 0; k < 50; ++k) {
        sigma = q * std::tanh(sigma);
    }
    ScenarioParams s = benchmark_scenario(0.1);
    s.plant.q = q;
    s.v0.setZero();
    s.init.w0 = FieldSpec::cosbump(1.0);
    s.numerics.t_final = 5.0;
    const RunOutput out = run_mode(s, RunMode::open_loop);
    const DecayFit f = fit_decay(out.times(), out.column("energy_plant"), 2.0, 5.0);
    CHECK_THAT(f.mu, WithinAbs(-2.0 * sigma, 0.05 * 2.0 * sigma));
}

TEST_CASE("blow-up is reported with its time", "[harness][open_loop]") {
    ScenarioParams s = benchmark_scenario(0.1);
    s.plant.q = 5.0;
    s.v0.setZero();
    s.init.w0 = FieldSpec::cosbump(1.0);
    s.numerics.t_final = 20.0;
    try {
        (void)run_mode(s, RunMode::open_loop);
        FAIL("no blow-up reported");
    } catch (const NonFiniteError& e) {
        CHECK(e.time() > 0.0);
        CHECK(e.time() < 20.0);
        CHECK_THAT(std::string(e.what()), ContainsSubstring("t="));
    }
}

TEST_CASE("state feedback with exact disturbance drives the error to zero", "[harness][state_feedback]") {
    ScenarioParams s = benchmark_scenario(0.1);
    s.numerics.t_final = 10.0;
    RunOptions o;
    o.seed = 3;
    const RunOutput out = run_mode(s, RunMode::state_feedback, o);
    CHECK(out.rows.back().energy_plant / out.rows.front().energy_plant <= 1e-3);
    double tail = 0.0;
    for (const auto& r : out.rows) {
        if (r.t >= 5.0) {
            tail = std::max(tail, std::abs(r.e));
        }
    }
    CHECK(tail <= 1e-2);
}

TEST_CASE("observer error decays", "[harness][observer_error]") {
    ScenarioParams s = benchmark_scenario(0.1);
    s.c2 = 0.5;
    s.numerics.t_final = 10.0;
    RunOptions o;
    o.seed = 5;
    const RunOutput out = run_mode(s, RunMode::observer_error, o);
    const auto E = out.column("energy_obs_err");
    CHECK(E.back() / E.front() <= 0.1);
    CHECK(fit_decay(out.times(), E, 0.0, 10.0).mu > 0.0);
}

TEST_CASE("adaptive observer alone identifies the frequency", "[harness][adaptive_only]") {
    ScenarioParams s = benchmark_scenario(0.1);
    s.numerics.t_final = 40.0;
    const RunOutput out = run_mode(s, RunMode::adaptive_only);
    for (const auto& r : out.rows) {
        if (r.t >= 30.0) {
            CHECK(std::abs(r.theta_hat - 0.25) <= 1e-3);
        }
    }
}

TEST_CASE("closed loop is consistent across grids", "[harness][full]") {
    auto tail_max = [](int n) {
        ScenarioParams s = benchmark_scenario(0.1);
        s.numerics.t_final = 20.0;
        s.numerics.n_cells = n;
        const RunOutput out = run_closed_loop(s);
        double m = 0.0;
        for (const auto& r : out.rows) {
            if (r.t >= 10.0) {
                m = std::max(m, std::abs(r.e));
            }
        }
        return std::pair{m, out.rows.back().theta_hat};
    };
    const auto [e100, th100] = tail_max(100);
    const auto [e200, th200] = tail_max(200);
    CHECK(std::abs(e100 - e200) <= 0.3 * e200);
    CHECK(std::abs(th100 - th200) <= 0.01);
}

TEST_CASE("run_mode rejects invalid scenarios before integrating", "[harness]") {
    ScenarioParams s = benchmark_scenario(0.1);
    s.k0 = 0.1;
    CHECK_THROWS_WITH(run_mode(s, RunMode::full), ContainsSubstring("k0 > 1/(4 iota)"));
}
