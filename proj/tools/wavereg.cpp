// Command-line front end: run, verify, sweep, fit.
//
// Exit codes: 0 success, 1 simulation blow-up, 2 configuration error, 3 verification failure.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "wavereg/decay_fit.hpp"
#include "wavereg/export.hpp"
#include "wavereg/scenario.hpp"
#include "wavereg/simulation.hpp"
#include "wavereg/verify.hpp"

namespace fs = std::filesystem;
using namespace wavereg;

namespace {

enum Exit { kOk = 0, kBlowUp = 1, kConfig = 2, kVerify = 3 };

struct RunResult {
    int code = kOk;
    std::string message;
};

RunResult run_one(const fs::path& scenario, const std::string& mode, const fs::path& out_dir,
                  std::optional<std::uint64_t> seed) {
    try {
        const ScenarioParams s = load_scenario(scenario);
        RunOptions opts;
        opts.seed = seed;
        const RunOutput out = run_mode(s, parse_run_mode(mode), opts);
        export_run(out, out_dir);
        double emax = 0.0;
        const double t_tail = 0.8 * s.numerics.t_final;
        for (const auto& r : out.rows) {
            if (r.t >= t_tail) {
                emax = std::max(emax, std::abs(r.e));
            }
        }
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s: mode=%s rows=%zu max|e| over last 20%%=%.4g theta_hat=%.5g wall=%.2fs",
                      s.name.c_str(), mode.c_str(), out.rows.size(), emax, out.rows.back().theta_hat,
                      out.wall_seconds);
        return {kOk, buf};
    } catch (const NonFiniteError& e) {
        return {kBlowUp, scenario.string() + ": simulation blew up: " + e.what()};
    } catch (const CflError& e) {
        return {kConfig, scenario.string() + ": " + e.what()};
    } catch (const ConfigError& e) {
        return {kConfig, scenario.string() + ": " + e.what()};
    } catch (const Error& e) {
        return {kBlowUp, scenario.string() + ": " + e.what()};
    }
}

std::pair<double, double> parse_window(const std::string& w) {
    const auto colon = w.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("window must be t0:t1");
    }
    const auto a = detail::to_double(w.substr(0, colon));
    const auto b = detail::to_double(w.substr(colon + 1));
    if (!a || !b || !(*b > *a)) {
        throw ConfigError("window must be t0:t1 with t0 < t1");
    }
    return {*a, *b};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Output-regulation simulator for a delayed, anti-damped wave equation"};
    app.require_subcommand(1);

    std::string scenario;
    std::string mode = "full";
    std::string out_dir;
    std::int64_t seed = -1;
    auto* run = app.add_subcommand("run", "Simulate one scenario and write series.csv, final_fields.csv, meta.json");
    run->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("--mode", mode, "open_loop | state_feedback | observer_error | adaptive_only | full");
    run->add_option("--out", out_dir, "Output directory (default: out/<scenario name>)");
    run->add_option("--seed", seed, "Random initial data for state_feedback / observer_error");

    VerifyOptions vopt;
    std::string csv_path;
    double theta_override = std::nan("");
    auto* verify = app.add_subcommand("verify", "Kernel, identity and transform checks");
    verify->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    verify->add_option("--csv", csv_path, "Write kernel_name,grid_h,residual_max to this file");
    verify->add_option("--resolutions", vopt.resolutions, "Grid cell counts")->delimiter(',');
    verify->add_option("--order-min", vopt.tol.order_min, "Minimum observed order");
    verify->add_option("--boundary-tol", vopt.tol.boundary, "Boundary-row residual tolerance");
    verify->add_option("--oracle-tol", vopt.tol.oracle, "IVP oracle tolerance");
    verify->add_option("--identity-tol", vopt.tol.identity, "Identity residual tolerance");
    verify->add_option("--eta-tol", vopt.tol.eta_fit, "Harmonic fit tolerance");
    verify->add_option("--theta", theta_override, "Substitute theta in the f-kernel checks");

    std::string sweep_dir;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* sweep = app.add_subcommand("sweep", "Run every *.scn file of a directory in parallel");
    sweep->add_option("dir", sweep_dir, "Directory with scenario files")->required()->check(CLI::ExistingDirectory);
    sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sweep->add_option("--mode", mode, "Run mode for every scenario");
    sweep->add_option("--out", out_dir, "Output root (default: out)");

    std::string fit_csv;
    std::string column = "e";
    std::string window;
    int min_peaks = 5;
    auto* fit = app.add_subcommand("fit", "Exponential envelope fit of one CSV column");
    fit->add_option("csv", fit_csv, "series.csv from a run")->required()->check(CLI::ExistingFile);
    fit->add_option("--column", column, "Column name");
    fit->add_option("--window", window, "t0:t1")->required();
    fit->add_option("--min-peaks", min_peaks, "Minimum number of envelope peaks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    if (*run) {
        const fs::path dir = out_dir.empty() ? fs::path("out") / fs::path(scenario).stem() : fs::path(out_dir);
        std::optional<std::uint64_t> s;
        if (seed >= 0) {
            s = static_cast<std::uint64_t>(seed);
        }
        const RunResult r = run_one(scenario, mode, dir, s);
        (r.code == kOk ? std::cout : std::cerr) << r.message << '\n';
        if (r.code == kOk) {
            std::cout << "wrote " << dir.string() << '\n';
        }
        return r.code;
    }

    if (*verify) {
        try {
            const ScenarioParams s = load_scenario(scenario);
            if (!std::isnan(theta_override)) {
                vopt.theta_override = theta_override;
            }
            const VerifyReport rep = verify_all(s, vopt);
            rep.print(std::cout);
            if (!csv_path.empty()) {
                std::ofstream out(csv_path);
                rep.write_csv(out);
            }
            std::cout << (rep.all_passed() ? "all checks passed\n" : "verification FAILED\n");
            return rep.all_passed() ? kOk : kVerify;
        } catch (const ConfigError& e) {
            std::cerr << e.what() << '\n';
            return kConfig;
        } catch (const Error& e) {
            std::cerr << e.what() << '\n';
            return kVerify;
        }
    }

    if (*sweep) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(sweep_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".scn") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        const fs::path root = out_dir.empty() ? fs::path("out") : fs::path(out_dir);
        std::vector<RunResult> results(files.size());
        std::atomic<std::size_t> next{0};
        std::mutex print_mutex;
        auto worker = [&] {
            for (std::size_t i = next++; i < files.size(); i = next++) {
                results[i] = run_one(files[i], mode, root / files[i].stem(), std::nullopt);
                const std::lock_guard<std::mutex> lock(print_mutex);
                std::cout << (results[i].code == kOk ? "ok   " : "FAIL ") << results[i].message << std::endl;
            }
        };
        std::vector<std::thread> pool;
        const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(files.size(), 1)));
        for (unsigned j = 0; j < n; ++j) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
        int code = kOk;
        for (const auto& r : results) {
            code = std::max(code, r.code);
        }
        return code;
    }

    if (*fit) {
        try {
            const auto [t0, t1] = parse_window(window);
            const CsvTable table = read_csv(fit_csv);
            const DecayFit f = fit_decay(table.column("t"), table.column(column), t0, t1, min_peaks);
            std::printf("column=%s window=[%g, %g] M=%.6g mu=%.6g residual=%.4g peaks=%d\n", column.c_str(), f.t0,
                        f.t1, f.M, f.mu, f.residual, f.n_peaks);
            return kOk;
        } catch (const InsufficientPeaksError& e) {
            std::cerr << e.what() << '\n';
            return kVerify;
        } catch (const ConfigError& e) {
            std::cerr << e.what() << '\n';
            return kConfig;
        }
    }
    return kOk;
}
