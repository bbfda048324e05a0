#pragma once

#include <optional>
#include <string>
#include <vector>

#include "morl/adaptation.hpp"
#include "morl/metrics.hpp"
#include "morl/trainer.hpp"
#include "morl/types.hpp"

namespace morl::cli {

/// Provenance sidecar written next to every emitted numeric artifact.
struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string code_version;
    std::string resolved_config; // canonical key=value rendering
};

void write_manifest(const std::string& dir, const RunManifest& manifest);

/// front.csv: pref components then return components, one evaluation row each.
void write_front_csv(const std::string& path,
                     const std::vector<std::pair<Preference, VectorReturn>>& rows);
std::vector<std::pair<Preference, VectorReturn>> read_front_csv(const std::string& path);

struct FrontMetrics {
    VectorReturn reference_point;
    double hv = 0.0;
    double sp_filtered = 0.0;
    double sp_raw = 0.0;
    double eu = 0.0;
    bool eu_grid_warning = false;
};

FrontMetrics compute_front_metrics(const std::vector<std::pair<Preference, VectorReturn>>& rows,
                                   const VectorReturn& reference_point);

/// metrics.json sidecar carrying the front metrics plus provenance fields.
void write_front_metrics_json(const std::string& path, const FrontMetrics& m,
                              const std::string& config_hash, std::uint64_t seed);

/// Per-preference bc-weight resolution for evaluation.
struct WbcSpec {
    enum class Mode { kFixed, kAdapt, kOracle } mode = Mode::kFixed;
    double fixed_value = 0.6;
    std::size_t adapt_iterations = 3;
    std::size_t adapt_trajectories = 10;
    std::size_t oracle_grid = 20;
    std::size_t oracle_episodes = 1;

    static WbcSpec parse(const std::string& text);
    std::string to_string() const;
};

struct ResolvedWbc {
    std::vector<double> per_pref;
    std::vector<adapt::AdaptationReport> reports; // adapt mode only
};

ResolvedWbc resolve_wbc(const train::PolicyBundle& bundle, const env::EnvSpec& spec,
                        const WbcSpec& wbc, std::size_t n_prefs, std::uint64_t seed);

} // namespace morl::cli
