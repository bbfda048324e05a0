#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "morl/dataset.hpp"
#include "morl/env.hpp"
#include "morl/nn.hpp"
#include "morl/regularizers.hpp"
#include "morl/types.hpp"

namespace morl::train {

struct TrainConfig {
    std::string env_name = "mo-lineworld";
    std::string algo = "mse"; // mse | cvae | diffusion | mo-cql | bcp
    double theta = 0.0;
    double wbc_min = kDefaultBcWeightMin;
    double eta = 50.0; // behavior cloning scale
    double gamma = 0.99;
    std::size_t batch_size = 128;
    std::size_t total_iterations = 50000;
    std::size_t n_critics = 2;
    double polyak_tau = 0.005;
    std::uint64_t seed = 0;

    // optimizer overrides
    double learning_rate = 3e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    // architecture
    std::vector<std::size_t> hidden = {64, 64};
    std::size_t latent_dim = 0; // 0 = 2 * action_dim
    std::size_t diffusion_steps = 5;
    double diffusion_beta_lo = 1e-4;
    double diffusion_beta_hi = 0.1;

    // MO-CQL only
    double cql_alpha = 10.0;

    std::size_t log_interval = 100;
    std::size_t checkpoint_interval = 0; // 0 = final checkpoint only

    void validate() const;
    bool uses_augmented_conditioning() const { return algo == "mse" || algo == "cvae" || algo == "diffusion"; }
};

/// n_critics networks (state, action, conditioning) -> vector Q, plus matching
/// target networks (hard-copied at construction, Polyak-tracked afterwards).
class CriticEnsemble {
  public:
    CriticEnsemble(std::size_t state_dim, std::size_t action_dim, std::size_t cond_dim,
                   std::size_t n_objectives, std::size_t n_critics,
                   const std::vector<std::size_t>& hidden, nn::Rng& rng);

    std::size_t n_critics() const { return online_.size(); }
    std::size_t n_objectives() const { return n_objectives_; }

    /// Graph-building forward of online critic k; `actions` may carry gradients.
    ad::Tensor forward_graph(std::size_t k, const ad::Mat& states, const ad::Tensor& actions,
                             const ad::Mat& conds) const;
    ad::Mat forward_raw(std::size_t k, const ad::Mat& states, const ad::Mat& actions,
                        const ad::Mat& conds) const;
    ad::Mat target_raw(std::size_t k, const ad::Mat& states, const ad::Mat& actions,
                       const ad::Mat& conds) const;

    /// Pessimistic vector combination: per row, scalarize each critic's target
    /// output with the task weights and keep the full vector of the critic
    /// attaining the minimum.
    ad::Mat combined_target(const ad::Mat& states, const ad::Mat& actions, const ad::Mat& conds,
                            const ad::Mat& task_weights) const;

    void polyak(double tau);

    std::vector<ad::Tensor> online_parameters() const;
    std::vector<ad::Tensor> target_parameters() const;

  private:
    std::size_t n_objectives_;
    std::vector<nn::Mlp> online_;
    std::vector<nn::Mlp> target_;
};

/// Preference-conditioned actor plus vector-critic ensemble and optimizer state.
struct PolicyBundle {
    TrainConfig config;
    env::EnvSpec spec;
    std::unique_ptr<reg::Actor> actor;
    std::optional<CriticEnsemble> critics; // absent for pure-cloning baselines
    std::unique_ptr<nn::Adam> actor_opt;
    std::unique_ptr<nn::Adam> critic_opt;
    std::size_t iteration = 0;

    bool augmented() const { return config.uses_augmented_conditioning(); }
    std::size_t cond_dim() const;
    /// Parameters in checkpoint declaration order (actor, critics, targets).
    std::vector<ad::Tensor> all_parameters() const;
};

/// Builds freshly initialized networks for the config (deterministic in seed).
PolicyBundle make_bundle(const TrainConfig& config, const env::EnvSpec& spec);

/// Eq.-13 critic loss on a sampled batch: 1-sample bootstrap through the actor
/// at (s', w-hat), pessimistic ensemble-combined vector target, terminal
/// transitions drop the bootstrap. Mean over batch and critics of the squared
/// vector error summed over objectives.
ad::Tensor critic_loss(const PolicyBundle& bundle, const data::SampleBatch& batch, nn::Rng& rng);

/// Eq.-13 actor loss: -(task . Q(s, a')) + w_bc * eta * L_bc per sample,
/// a' sampled pathwise-differentiably, batch mean.
ad::Tensor actor_loss(const PolicyBundle& bundle, const data::SampleBatch& batch, nn::Rng& rng);

struct LogRow {
    std::size_t iteration = 0;
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double mean_wbc = 0.0;
    double wall_ms = 0.0;
};

struct TrainResult {
    PolicyBundle bundle;
    std::vector<LogRow> log;
};

/// Algorithm-1 training loop (also drives the MO-CQL and BC(P) baselines per
/// config.algo). Writes metrics.csv and checkpoints under run_dir when given.
TrainResult train(const TrainConfig& config, const data::OfflineDataset& ds,
                  const std::string& run_dir = "",
                  const std::string& config_hash = "");

/// Per-preference bc-weight source used at evaluation time.
using WbcSource = std::function<double(const Preference&, std::size_t pref_index)>;
WbcSource fixed_wbc(double value);

/// Rolls episodes_per_pref episodes for each of n_prefs equidistant simplex
/// points and returns per-preference mean undiscounted vector returns.
std::vector<std::pair<Preference, VectorReturn>> evaluate_policy(
    const PolicyBundle& bundle, const env::EnvSpec& spec, std::size_t n_prefs,
    std::size_t episodes_per_pref, const WbcSource& wbc, std::uint64_t seed);

/// One policy rollout under fixed conditioning; used by evaluation/adaptation.
Trajectory rollout_policy(const PolicyBundle& bundle, const env::EnvSpec& spec,
                          const std::vector<double>& conditioning, std::uint64_t seed);

/// Conditioning vector for a target preference (augmented or plain by config).
std::vector<double> conditioning_for(const PolicyBundle& bundle, const Preference& pref,
                                     double wbc);

// Bundle checkpoint I/O (nn checkpoint format with the config in the header).
void save_bundle(const std::string& path, const PolicyBundle& bundle,
                 const std::string& config_hash);
PolicyBundle load_bundle(const std::string& path);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

} // namespace morl::train
