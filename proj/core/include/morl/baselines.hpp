#pragma once

#include <utility>

#include "morl/regularizers.hpp"
#include "morl/trainer.hpp"

namespace morl::baselines {

/// Conservative weight plus the shared training configuration (no regularizer
/// family; MO-CQL has no behavior-cloning term).
struct CqlConfig {
    train::TrainConfig base; // base.algo == "mo-cql"
    double alpha = 10.0;
};

/// tanh-squashed Gaussian policy with state-dependent mean and log-std bounded
/// to [-5, 2]. Evaluation uses the mean action; sampling is reparameterized.
class GaussianActor final : public reg::Actor {
  public:
    GaussianActor(std::size_t state_dim, std::size_t cond_dim, std::size_t action_dim,
                  double action_scale, const std::vector<std::size_t>& hidden, nn::Rng& rng,
                  const std::string& name_prefix = "actor.gaussian");

    reg::Family family() const override { return reg::Family::kMse; } // closest label; no bc term
    ad::Tensor sample_actions_diff(const ad::Mat& states, const ad::Mat& conds,
                                   nn::Rng& rng) const override;
    ad::Mat sample_actions_raw(const ad::Mat& states, const ad::Mat& conds,
                               nn::Rng& rng) const override;
    ad::Mat eval_actions(const ad::Mat& states, const ad::Mat& conds,
                         nn::Rng& rng) const override;
    ad::Tensor bc_loss_per_sample(const ad::Mat& states, const ad::Mat& conds,
                                  const ad::Mat& actions, nn::Rng& rng) const override;
    std::vector<ad::Tensor> parameters() const override;

  private:
    nn::Mlp net_; // (s, cond) -> (mean, log_std)
};

/// Appendix-B MO-CQL losses: plain scalarized actor objective and the Bellman
/// critic loss plus the alpha-weighted conservative gap (one policy-action
/// sample per state, averaged over the critic ensemble).
std::pair<ad::Tensor, ad::Tensor> mo_cql_losses(const train::PolicyBundle& bundle,
                                                const data::SampleBatch& batch, double alpha,
                                                nn::Rng& rng);

/// Preference-conditioned behavior cloning: MSE between predicted and dataset
/// actions with the actor conditioned on (s, approximate behavior preference).
ad::Tensor bc_p_loss(const train::PolicyBundle& bundle, const data::SampleBatch& batch,
                     nn::Rng& rng);

} // namespace morl::baselines
