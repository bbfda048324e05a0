#pragma once

#include <memory>
#include <string>
#include <vector>

#include "morl/nn.hpp"
#include "morl/tensor.hpp"
#include "morl/types.hpp"

namespace morl::reg {

enum class Family { kMse, kCvae, kDiffusion };

Family family_from_string(const std::string& s);
std::string to_string(Family f);

/// Actor conditioning input. Concatenation order is fixed:
/// [state || task_part || bc_weight].
struct ActorInput {
    std::vector<double> state;
    AugmentedPreference aug_pref;

    std::vector<double> flat() const {
        std::vector<double> out(state);
        const auto cond = aug_pref.flat();
        out.insert(out.end(), cond.begin(), cond.end());
        return out;
    }
};

/// DDPM forward-process parameters. alpha_bar[i] = prod_{j<=i}(1-beta[j]),
/// strictly decreasing, all < 1.
struct DiffusionSchedule {
    std::vector<double> betas;
    std::vector<double> alphas;     // 1 - beta
    std::vector<double> alpha_bars; // running product

    explicit DiffusionSchedule(std::vector<double> betas_in);
    static DiffusionSchedule linear(std::size_t n_steps, double beta_lo, double beta_hi);
    std::size_t n_steps() const { return betas.size(); }
};

/// Preference-conditioned policy with a behavior-cloning loss. Single owner
/// during training; immutable once frozen.
class Actor {
  public:
    virtual ~Actor() = default;

    virtual Family family() const = 0;

    /// Differentiable action batch (graph-building; pathwise gradients).
    virtual ad::Tensor sample_actions_diff(const ad::Mat& states, const ad::Mat& conds,
                                           nn::Rng& rng) const = 0;
    /// Fast numeric sampling for rollouts and bootstrap targets.
    virtual ad::Mat sample_actions_raw(const ad::Mat& states, const ad::Mat& conds,
                                       nn::Rng& rng) const = 0;
    /// Action used for evaluation rollouts (defaults to the sampling path).
    virtual ad::Mat eval_actions(const ad::Mat& states, const ad::Mat& conds,
                                 nn::Rng& rng) const {
        return sample_actions_raw(states, conds, rng);
    }
    /// (B,1) per-sample behavior-cloning loss on dataset actions.
    virtual ad::Tensor bc_loss_per_sample(const ad::Mat& states, const ad::Mat& conds,
                                          const ad::Mat& actions, nn::Rng& rng) const = 0;
    /// Batch-mean behavior-cloning loss.
    ad::Tensor bc_loss(const ad::Mat& states, const ad::Mat& conds, const ad::Mat& actions,
                       nn::Rng& rng) const {
        return ad::mean_all(bc_loss_per_sample(states, conds, actions, rng));
    }

    virtual std::vector<ad::Tensor> parameters() const = 0;

    std::size_t state_dim() const { return state_dim_; }
    std::size_t cond_dim() const { return cond_dim_; }
    std::size_t action_dim() const { return action_dim_; }
    double action_scale() const { return action_scale_; }

  protected:
    Actor(std::size_t state_dim, std::size_t cond_dim, std::size_t action_dim,
          double action_scale)
        : state_dim_(state_dim), cond_dim_(cond_dim), action_dim_(action_dim),
          action_scale_(action_scale) {}

    std::size_t state_dim_;
    std::size_t cond_dim_;
    std::size_t action_dim_;
    double action_scale_;
};

/// Deterministic tanh-squashed MLP (TD3+BC-style regularization).
class MseActor final : public Actor {
  public:
    MseActor(std::size_t state_dim, std::size_t cond_dim, std::size_t action_dim,
             double action_scale, const std::vector<std::size_t>& hidden, nn::Rng& rng,
             const std::string& name_prefix = "actor.mse");

    Family family() const override { return Family::kMse; }
    ad::Tensor sample_actions_diff(const ad::Mat& states, const ad::Mat& conds,
                                   nn::Rng& rng) const override;
    ad::Mat sample_actions_raw(const ad::Mat& states, const ad::Mat& conds,
                               nn::Rng& rng) const override;
    ad::Tensor bc_loss_per_sample(const ad::Mat& states, const ad::Mat& conds,
                                  const ad::Mat& actions, nn::Rng& rng) const override;
    std::vector<ad::Tensor> parameters() const override;

    const nn::Mlp& net() const { return net_; }

  private:
    nn::Mlp net_;
};

/// Conditional VAE policy; decoding a prior latent is the decision path.
class CvaeActor final : public Actor {
  public:
    CvaeActor(std::size_t state_dim, std::size_t cond_dim, std::size_t action_dim,
              double action_scale, std::size_t latent_dim,
              const std::vector<std::size_t>& hidden, nn::Rng& rng,
              const std::string& name_prefix = "actor.cvae");

    Family family() const override { return Family::kCvae; }
    ad::Tensor sample_actions_diff(const ad::Mat& states, const ad::Mat& conds,
                                   nn::Rng& rng) const override;
    ad::Mat sample_actions_raw(const ad::Mat& states, const ad::Mat& conds,
                               nn::Rng& rng) const override;
    /// Negative ELBO: per-sample reconstruction SSE + closed-form KL.
    ad::Tensor bc_loss_per_sample(const ad::Mat& states, const ad::Mat& conds,
                                  const ad::Mat& actions, nn::Rng& rng) const override;
    std::vector<ad::Tensor> parameters() const override;

    std::size_t latent_dim() const { return latent_dim_; }
    const nn::Mlp& encoder() const { return encoder_; }
    const nn::Mlp& decoder() const { return decoder_; }

  private:
    std::size_t latent_dim_;
    nn::Mlp encoder_; // (s, a, cond) -> (mu, log-variance)
    nn::Mlp decoder_; // (s, z, cond) -> action (tanh-squashed)
};

/// DDPM policy; the reconstruction loss is the bc term and reverse-process
/// ancestral sampling is the decision path (timestep enters as i/n_steps).
class DiffusionActor final : public Actor {
  public:
    DiffusionActor(std::size_t state_dim, std::size_t cond_dim, std::size_t action_dim,
                   double action_scale, DiffusionSchedule schedule,
                   const std::vector<std::size_t>& hidden, nn::Rng& rng,
                   const std::string& name_prefix = "actor.diffusion");

    Family family() const override { return Family::kDiffusion; }
    ad::Tensor sample_actions_diff(const ad::Mat& states, const ad::Mat& conds,
                                   nn::Rng& rng) const override;
    ad::Mat sample_actions_raw(const ad::Mat& states, const ad::Mat& conds,
                               nn::Rng& rng) const override;
    ad::Tensor bc_loss_per_sample(const ad::Mat& states, const ad::Mat& conds,
                                  const ad::Mat& actions, nn::Rng& rng) const override;
    std::vector<ad::Tensor> parameters() const override;

    const DiffusionSchedule& schedule() const { return schedule_; }
    const nn::Mlp& eps_net() const { return eps_net_; }

  private:
    DiffusionSchedule schedule_;
    nn::Mlp eps_net_; // (noisy action, s, cond, i/n) -> predicted noise
};

// Spec-surface single-sample wrappers.
double bc_loss_mse(const MseActor& actor, const ActorInput& input,
                   const std::vector<double>& action);
double bc_loss_cvae(const CvaeActor& actor, const ActorInput& input,
                    const std::vector<double>& action, nn::Rng& rng);
double bc_loss_diffusion(const DiffusionActor& actor, const ActorInput& input,
                         const std::vector<double>& action, nn::Rng& rng);
std::vector<double> sample_action(const Actor& actor, const ActorInput& input, nn::Rng& rng);

/// Assembles the (B, cond_dim) conditioning matrix [task_part || bc_weight].
ad::Mat conditioning_matrix(const std::vector<AugmentedPreference>& prefs);
/// Assembles a (B, n) matrix of plain preferences (baseline conditioning).
ad::Mat conditioning_matrix(const std::vector<Preference>& prefs);

} // namespace morl::reg
