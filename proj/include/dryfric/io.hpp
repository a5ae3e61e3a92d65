#pragma once

#include <algorithm>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <dryfric/curve.hpp>
#include <dryfric/simulate.hpp>
#include <dryfric/version.hpp>

namespace dryfric {

// filesystem and parse failures; callers map this to a distinct exit code
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// 17 significant digits: the shortest fixed precision that round-trips every
// double, so parse + re-emit is byte-stable
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    return os;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    return is;
}

}  // namespace detail

// --- density curves ---

inline std::string curve_to_csv(const DensityCurve& c) {
    c.check();
    std::string out = "v,density\n";
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        out += detail::fmt17(c.grid[i]);
        out += ',';
        out += detail::fmt17(c.values[i]);
        out += '\n';
    }
    return out;
}

inline void write_curve_csv(const std::string& path, const DensityCurve& c) {
    detail::open_out(path) << curve_to_csv(c);
}

// parses "v,density" CSV; meta is not carried by the CSV format
inline DensityCurve read_curve_csv(const std::string& path) {
    auto is = detail::open_in(path);
    std::string line;
    if (!std::getline(is, line) || line != "v,density")
        throw IoError(path + ": expected 'v,density' header");
    DensityCurve c;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw IoError(path + ": malformed row: " + line);
        try {
            c.grid.push_back(std::stod(line.substr(0, comma)));
            c.values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw IoError(path + ": malformed row: " + line);
        }
    }
    c.check();
    return c;
}

inline void write_curve_json(const std::string& path, const DensityCurve& c) {
    c.check();
    nlohmann::json j{{"grid", c.grid}, {"values", c.values}, {"meta", c.meta}};
    detail::open_out(path) << j.dump(2) << '\n';
}

// --- ensembles ---

inline std::string ensemble_to_csv(const PathEnsemble& e) {
    const bool fn = !e.functionals.empty();
    std::string out = fn ? "path_index,terminal,l_t,occupation,int_b,int_abs_b,int_b2\n"
                         : "path_index,terminal\n";
    for (std::size_t p = 0; p < e.terminal.size(); ++p) {
        out += std::to_string(p);
        out += ',';
        out += detail::fmt17(e.terminal[p]);
        if (fn) {
            const auto& f = e.functionals[p];
            for (double x : {f.l_t, f.occupation, f.int_b, f.int_abs_b, f.int_b2}) {
                out += ',';
                out += detail::fmt17(x);
            }
        }
        out += '\n';
    }
    return out;
}

inline void write_ensemble_csv(const std::string& path, const PathEnsemble& e) {
    detail::open_out(path) << ensemble_to_csv(e);
}

inline nlohmann::json ensemble_summary(const PathEnsemble& e,
                                       double ess_value = -1.0) {
    std::vector<double> sorted = e.terminal;
    std::sort(sorted.begin(), sorted.end());
    Ecdf ecdf(sorted);
    nlohmann::json q;
    for (double p : {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99}) {
        char key[8];
        std::snprintf(key, sizeof(key), "%.2f", p);
        q[key] = ecdf.quantile(p);
    }
    nlohmann::json j{{"n", e.terminal.size()},
                     {"mean", sample_mean(e.terminal)},
                     {"variance", sample_variance(e.terminal)},
                     {"quantiles", q},
                     {"seed", e.config.seed},
                     {"dt", e.config.dt}};
    if (ess_value >= 0) j["ess"] = ess_value;
    return j;
}

inline void write_ensemble_summary(const std::string& path, const PathEnsemble& e,
                                   double ess_value = -1.0) {
    detail::open_out(path) << ensemble_summary(e, ess_value).dump(2) << '\n';
}

// --- run manifests ---

// every command writes one; rerunning from it must reproduce the outputs
// byte-identically (simulation outputs are pinned by seed + parameters)
struct RunManifest {
    std::string command;
    nlohmann::json parameters;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
};

inline void to_json(nlohmann::json& j, const RunManifest& m) {
    j = {{"command", m.command},
         {"parameters", m.parameters},
         {"seed", m.seed},
         {"versions",
          {{"library", version}, {"formula_ledger", formula_ledger_revision}}},
         {"outputs", m.outputs}};
}

inline void from_json(const nlohmann::json& j, RunManifest& m) {
    j.at("command").get_to(m.command);
    m.parameters = j.at("parameters");
    j.at("seed").get_to(m.seed);
    j.at("outputs").get_to(m.outputs);
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
    detail::open_out(path) << nlohmann::json(m).dump(2) << '\n';
}

inline RunManifest read_manifest(const std::string& path) {
    nlohmann::json j;
    detail::open_in(path) >> j;
    return j.get<RunManifest>();
}

}
