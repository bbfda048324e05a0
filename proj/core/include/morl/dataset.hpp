#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morl/env.hpp"
#include "morl/nn.hpp"
#include "morl/types.hpp"

namespace morl::data {

/// Trajectory store annotated with approximate behavior preferences
/// (L1-normalized shifted episode returns), filterable by cosine distance.
struct OfflineDataset {
    std::vector<Trajectory> trajectories;
    std::vector<Preference> approx_prefs; // parallel to trajectories
    std::string env_name;
    VectorReturn objective_shift; // applied to returns before normalization
    bool empty_filter_warning = false;

    std::size_t size() const { return trajectories.size(); }
    std::size_t n_objectives() const { return objective_shift.size(); }
    std::size_t total_transitions() const;
};

/// Mini-batch of transitions with their drawn target preferences, behavior
/// cloning weights and the resulting augmented preferences.
struct SampleBatch {
    std::vector<Transition> transitions;
    std::vector<Preference> prefs;
    std::vector<double> bc_weights;
    std::vector<AugmentedPreference> aug_prefs;

    std::size_t size() const { return transitions.size(); }
};

enum class PrefSamplerKind { kUniformSimplex, kFixed, kCornerMixture };

struct PrefSamplerSpec {
    PrefSamplerKind kind = PrefSamplerKind::kUniformSimplex;
    std::optional<Preference> fixed; // required for kFixed

    static PrefSamplerSpec uniform() { return {PrefSamplerKind::kUniformSimplex, std::nullopt}; }
    static PrefSamplerSpec fixed_pref(Preference p) { return {PrefSamplerKind::kFixed, std::move(p)}; }
    static PrefSamplerSpec corners() { return {PrefSamplerKind::kCornerMixture, std::nullopt}; }
    /// Parses "uniform", "corners" or "fixed:w1,w2,...".
    static PrefSamplerSpec parse(const std::string& text);
    std::string to_string() const;
};

/// Rolls out n_traj scripted policies (quality_mix fraction expert, the rest
/// amateur with the given noise scale, behavior preferences per sampler;
/// corner-mixture assigns corners round-robin) and annotates every trajectory
/// with its approximate behavior preference.
OfflineDataset generate_dataset(const env::EnvSpec& spec, std::size_t n_traj, double quality_mix,
                                double noise_scale, const PrefSamplerSpec& sampler,
                                std::uint64_t seed);

/// L1-normalized shifted episode return.
Preference approx_behavior_pref(const Trajectory& traj, const VectorReturn& shift);

/// Trajectories whose approximate behavior preference lies within cosine
/// distance 2*theta of the target. Empty results are flagged, not errors.
OfflineDataset filter_subdataset(const OfflineDataset& ds, const Preference& target, double theta);

/// The ceil(ratio*|D|) trajectories closest to the target by cosine distance,
/// ties broken by trajectory index ascending.
OfflineDataset ratio_subdataset(const OfflineDataset& ds, const Preference& target, double ratio);

/// Transition-uniform batch; per transition draws a target preference uniform
/// on the cosine cap of radius 2*theta around the trajectory's approximate
/// behavior preference, and a bc weight uniform on [wbc_min, 1].
SampleBatch sample_batch(const OfflineDataset& ds, std::size_t batch_size, double theta,
                         double wbc_min, nn::Rng& rng);

/// Supervised-cloning batch: transitions paired with their own trajectory's
/// approximate behavior preference (no resampling).
SampleBatch sample_bc_batch(const OfflineDataset& ds, std::size_t batch_size, nn::Rng& rng);

/// Uniform draw on {pref : cosine_distance(center, pref) <= 2*theta} (exact
/// interval sampling for n=2; rejection with a 10,000-retry budget and center
/// fallback for n>=3).
Preference sample_pref_in_cap(const Preference& center, double theta, nn::Rng& rng);

Preference sample_uniform_simplex(std::size_t n, nn::Rng& rng);

/// Concatenates same-environment datasets; the objective shift and the
/// approximate behavior preferences are recomputed over the union.
OfflineDataset concat_datasets(const std::vector<OfflineDataset>& parts);

/// jsonl: header line {format_version, env, n_objectives, objective_shift},
/// then one trajectory object per line. Full round-trip precision.
void save_dataset(const OfflineDataset& ds, const std::string& path);
OfflineDataset load_dataset(const std::string& path);

} // namespace morl::data
