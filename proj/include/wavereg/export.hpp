#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "wavereg/errors.hpp"
#include "wavereg/simulation.hpp"

namespace wavereg {

inline constexpr const char* kCsvHeader = "t,e,u,theta_hat,yd,w0t,yref,energy_plant,energy_obs_err,pred_err";

namespace detail {

inline void put_number(std::string& line, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v + 0.0); // prints -0 as 0
    line += buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    return out;
}

} // namespace detail

/// Time series as CSV with the fixed column set; missing diagnostic values are empty cells.
inline void export_csv(const RunOutput& run, std::ostream& out) {
    out << kCsvHeader << '\n';
    std::string line;
    for (const auto& r : run.rows) {
        line.clear();
        for (const double v : {r.t, r.e, r.u, r.theta_hat, r.yd, r.w0t, r.yref, r.energy_plant}) {
            detail::put_number(line, v);
            line += ',';
        }
        if (r.energy_obs_err) {
            detail::put_number(line, *r.energy_obs_err);
        }
        line += ',';
        if (r.pred_err) {
            detail::put_number(line, *r.pred_err);
        }
        out << line << '\n';
    }
}

inline void export_csv(const RunOutput& run, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    export_csv(run, out);
}

/// x, w, w_t at the end of the run.
inline void export_final_fields(const RunOutput& run, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "x,w,w_t\n";
    std::string line;
    for (Eigen::Index i = 0; i < run.w_final.size(); ++i) {
        line.clear();
        detail::put_number(line, run.x_final(i));
        line += ',';
        detail::put_number(line, run.w_final(i));
        line += ',';
        detail::put_number(line, run.wt_final(i));
        out << line << '\n';
    }
}

[[nodiscard]] inline nlohmann::json run_metadata(const RunOutput& run) {
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(run.scenario_hash));
    return {{"scenario", run.scenario_name},
            {"mode", to_string(run.mode)},
            {"scenario_hash", hash},
            {"n_cells", run.n_cells},
            {"dt", run.dt},
            {"rows", run.rows.size()},
            {"wall_seconds", run.wall_seconds}};
}

/// series.csv, final_fields.csv and meta.json in `dir`, created if needed.
inline void export_run(const RunOutput& run, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    export_csv(run, dir / "series.csv");
    export_final_fields(run, dir / "final_fields.csv");
    auto meta = detail::open_out(dir / "meta.json");
    meta << run_metadata(run).dump(2) << '\n';
}

/// Named columns of a CSV written by export_csv. Empty cells read as NaN.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    [[nodiscard]] const std::vector<double>& column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return columns[i];
            }
        }
        throw ConfigError("CSV has no column '" + name + "'");
    }
};

[[nodiscard]] inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open CSV '" + path.string() + "'");
    }
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(path.string(), 1, "empty CSV");
    }
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) {
            table.header.push_back(detail::trim(cell));
        }
    }
    table.columns.resize(table.header.size());
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (cells.size() != table.header.size()) {
            throw ParseError(path.string(), lineno,
                             "expected " + std::to_string(table.header.size()) + " cells, got " +
                                 std::to_string(cells.size()));
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string c = detail::trim(cells[i]);
            if (c.empty()) {
                table.columns[i].push_back(std::nan(""));
                continue;
            }
            const auto v = detail::to_double(c);
            if (!v) {
                throw ParseError(path.string(), lineno, "bad number '" + c + "'");
            }
            table.columns[i].push_back(*v);
        }
    }
    return table;
}

} // namespace wavereg
