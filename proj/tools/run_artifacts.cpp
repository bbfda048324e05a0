#include "run_artifacts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "morl/errors.hpp"

namespace morl::cli {

using json = nlohmann::json;

void write_manifest(const std::string& dir, const RunManifest& manifest) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir + "/run_manifest.json", std::ios::trunc);
    out << json{{"command", manifest.command},
                {"config_hash", manifest.config_hash},
                {"seed", manifest.seed},
                {"code_version", manifest.code_version}}
               .dump(2)
        << "\n";
    std::ofstream cfg(dir + "/resolved_config.cfg", std::ios::trunc);
    cfg << manifest.resolved_config;
}

void write_front_csv(const std::string& path,
                     const std::vector<std::pair<Preference, VectorReturn>>& rows) {
    if (rows.empty()) throw std::invalid_argument("write_front_csv: empty rows");
    std::ofstream out(path, std::ios::trunc);
    out.precision(17);
    const std::size_t n = rows.front().second.size();
    for (std::size_t j = 0; j < n; ++j) out << "pref" << j << ",";
    for (std::size_t j = 0; j < n; ++j) out << "return" << j << (j + 1 < n ? "," : "\n");
    for (const auto& [pref, ret] : rows) {
        for (std::size_t j = 0; j < n; ++j) out << pref[j] << ",";
        for (std::size_t j = 0; j < n; ++j) out << ret[j] << (j + 1 < n ? "," : "\n");
    }
}

std::vector<std::pair<Preference, VectorReturn>> read_front_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open front csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("front csv: empty file", 1);
    std::size_t n = 0;
    {
        std::stringstream ss(line);
        std::string tok;
        std::size_t cols = 0;
        while (std::getline(ss, tok, ',')) ++cols;
        if (cols % 2 != 0) throw ParseError("front csv: odd column count", 1);
        n = cols / 2;
    }
    std::vector<std::pair<Preference, VectorReturn>> rows;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        if (vals.size() != 2 * n) throw ParseError("front csv: bad row", line_no);
        rows.emplace_back(Preference(std::vector<double>(vals.begin(), vals.begin() + n)),
                          VectorReturn(vals.begin() + n, vals.end()));
    }
    return rows;
}

FrontMetrics compute_front_metrics(const std::vector<std::pair<Preference, VectorReturn>>& rows,
                                   const VectorReturn& reference_point) {
    FrontMetrics m;
    m.reference_point = reference_point;
    std::vector<VectorReturn> pts;
    pts.reserve(rows.size());
    for (const auto& [p, r] : rows) pts.push_back(r);
    ParetoFront front(pts, reference_point);
    m.hv = hypervolume(front);
    m.sp_filtered = sparsity(front);
    m.sp_raw = sparsity_raw(pts);
    m.eu = expected_utility(rows, &m.eu_grid_warning);
    return m;
}

void write_front_metrics_json(const std::string& path, const FrontMetrics& m,
                              const std::string& config_hash, std::uint64_t seed) {
    std::ofstream out(path, std::ios::trunc);
    out << json{{"reference_point", m.reference_point},
                {"hv", m.hv},
                {"sp_filtered", m.sp_filtered},
                {"sp_raw", m.sp_raw},
                {"eu", m.eu},
                {"eu_grid_warning", m.eu_grid_warning},
                {"config_hash", config_hash},
                {"seed", seed}}
               .dump(2)
        << "\n";
}

WbcSpec WbcSpec::parse(const std::string& text) {
    WbcSpec spec;
    if (text.rfind("fixed:", 0) == 0) {
        spec.mode = Mode::kFixed;
        spec.fixed_value = std::stod(text.substr(6));
        if (spec.fixed_value <= 0.0 || spec.fixed_value > 1.0) {
            throw ConfigError("wbc fixed value outside (0,1]");
        }
        return spec;
    }
    if (text.rfind("adapt", 0) == 0) {
        spec.mode = Mode::kAdapt;
        const auto colon = text.find(':');
        if (colon != std::string::npos) {
            std::stringstream ss(text.substr(colon + 1));
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) throw ConfigError("bad adapt spec token: " + tok);
                const std::string key = tok.substr(0, eq);
                const std::string value = tok.substr(eq + 1);
                if (key == "N") spec.adapt_iterations = std::stoul(value);
                else if (key == "K") spec.adapt_trajectories = std::stoul(value);
                else throw ConfigError("unknown adapt spec key: " + key);
            }
        }
        return spec;
    }
    if (text.rfind("oracle", 0) == 0) {
        spec.mode = Mode::kOracle;
        const auto colon = text.find(':');
        if (colon != std::string::npos) {
            std::stringstream ss(text.substr(colon + 1));
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) throw ConfigError("bad oracle spec token: " + tok);
                const std::string key = tok.substr(0, eq);
                const std::string value = tok.substr(eq + 1);
                if (key == "grid") spec.oracle_grid = std::stoul(value);
                else if (key == "episodes") spec.oracle_episodes = std::stoul(value);
                else throw ConfigError("unknown oracle spec key: " + key);
            }
        }
        return spec;
    }
    throw ConfigError("unknown wbc spec '" + text +
                      "' (expected fixed:<v> | adapt[:N=..,K=..] | oracle[:grid=..,episodes=..])");
}

std::string WbcSpec::to_string() const {
    switch (mode) {
        case Mode::kFixed: return "fixed:" + std::to_string(fixed_value);
        case Mode::kAdapt:
            return "adapt:N=" + std::to_string(adapt_iterations) +
                   ",K=" + std::to_string(adapt_trajectories);
        case Mode::kOracle:
            return "oracle:grid=" + std::to_string(oracle_grid) +
                   ",episodes=" + std::to_string(oracle_episodes);
    }
    return "?";
}

ResolvedWbc resolve_wbc(const train::PolicyBundle& bundle, const env::EnvSpec& spec,
                        const WbcSpec& wbc, std::size_t n_prefs, std::uint64_t seed) {
    ResolvedWbc out;
    out.per_pref.resize(n_prefs, wbc.fixed_value);
    if (!bundle.augmented() || wbc.mode == WbcSpec::Mode::kFixed) return out;
    for (std::size_t k = 0; k < n_prefs; ++k) {
        const double w0 = static_cast<double>(k) / static_cast<double>(n_prefs - 1);
        const Preference pref({w0, 1.0 - w0});
        if (wbc.mode == WbcSpec::Mode::kAdapt) {
            auto report = adapt::adapt(bundle, spec, pref, wbc.adapt_iterations,
                                       wbc.adapt_trajectories, train::mix_seed(seed, 0xad, k));
            out.per_pref[k] = report.final_wbc;
            out.reports.push_back(std::move(report));
        } else {
            out.per_pref[k] = adapt::oracle_wbc(bundle, spec, pref, wbc.oracle_grid,
                                                wbc.oracle_episodes,
                                                train::mix_seed(seed, 0x0c, k));
        }
    }
    return out;
}

} // namespace morl::cli
