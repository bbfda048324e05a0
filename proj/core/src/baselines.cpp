#include "morl/baselines.hpp"

#include <cmath>

#include "morl/errors.hpp"

namespace morl::baselines {

namespace {

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;

ad::Mat gaussian_mat(std::size_t rows, std::size_t cols, nn::Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    ad::Mat m(rows, cols);
    for (double& x : m.d) x = normal(rng);
    return m;
}

ad::Mat hcat(const ad::Mat& a, const ad::Mat& b) {
    ad::Mat out(a.rows, a.cols + b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        std::copy_n(a.d.data() + i * a.cols, a.cols, out.d.data() + i * out.cols);
        std::copy_n(b.d.data() + i * b.cols, b.cols, out.d.data() + i * out.cols + a.cols);
    }
    return out;
}

std::vector<std::size_t> mlp_widths(std::size_t in, const std::vector<std::size_t>& hidden,
                                    std::size_t out) {
    std::vector<std::size_t> w;
    w.push_back(in);
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
}

} // namespace

GaussianActor::GaussianActor(std::size_t state_dim, std::size_t cond_dim, std::size_t action_dim,
                             double action_scale, const std::vector<std::size_t>& hidden,
                             nn::Rng& rng, const std::string& name_prefix)
    : Actor(state_dim, cond_dim, action_dim, action_scale),
      net_({mlp_widths(state_dim + cond_dim, hidden, 2 * action_dim), nn::Activation::kRelu,
            nn::OutputActivation::kNone},
           rng, name_prefix) {}

ad::Tensor GaussianActor::sample_actions_diff(const ad::Mat& states, const ad::Mat& conds,
                                              nn::Rng& rng) const {
    ad::Tensor out = net_.forward(ad::Tensor::constant(hcat(states, conds)));
    ad::Tensor mean = ad::slice_cols(out, 0, action_dim_);
    ad::Tensor log_std = ad::clamp(ad::slice_cols(out, action_dim_, 2 * action_dim_),
                                   kLogStdMin, kLogStdMax);
    ad::Tensor eps = ad::Tensor::constant(gaussian_mat(states.rows, action_dim_, rng));
    ad::Tensor pre = ad::add(mean, ad::mul(ad::exp_(log_std), eps));
    return ad::scale(ad::tanh_(pre), action_scale_);
}

ad::Mat GaussianActor::sample_actions_raw(const ad::Mat& states, const ad::Mat& conds,
                                          nn::Rng& rng) const {
    ad::Mat out = net_.forward_raw(hcat(states, conds));
    ad::Mat actions(states.rows, action_dim_);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < states.rows; ++i) {
        for (std::size_t j = 0; j < action_dim_; ++j) {
            const double mean = out.at(i, j);
            const double log_std =
                std::clamp(out.at(i, action_dim_ + j), kLogStdMin, kLogStdMax);
            actions.at(i, j) =
                std::tanh(mean + std::exp(log_std) * normal(rng)) * action_scale_;
        }
    }
    return actions;
}

ad::Mat GaussianActor::eval_actions(const ad::Mat& states, const ad::Mat& conds,
                                    nn::Rng&) const {
    ad::Mat out = net_.forward_raw(hcat(states, conds));
    ad::Mat actions(states.rows, action_dim_);
    for (std::size_t i = 0; i < states.rows; ++i) {
        for (std::size_t j = 0; j < action_dim_; ++j) {
            actions.at(i, j) = std::tanh(out.at(i, j)) * action_scale_;
        }
    }
    return actions;
}

ad::Tensor GaussianActor::bc_loss_per_sample(const ad::Mat&, const ad::Mat&, const ad::Mat&,
                                             nn::Rng&) const {
    throw ConfigError("GaussianActor: MO-CQL has no behavior cloning term");
}

std::vector<ad::Tensor> GaussianActor::parameters() const { return net_.parameters(); }

std::pair<ad::Tensor, ad::Tensor> mo_cql_losses(const train::PolicyBundle& bundle,
                                                const data::SampleBatch& batch, double alpha,
                                                nn::Rng& rng) {
    if (bundle.config.algo != "mo-cql") throw ConfigError("mo_cql_losses: bundle is not mo-cql");
    if (alpha < 0.0) throw std::invalid_argument("mo_cql_losses: alpha must be >= 0");
    const std::size_t B = batch.size();
    const std::size_t n = bundle.spec.n_objectives;

    // Actor: -(1/B) sum w . Q(s, a', w), a' reparameterized.
    ad::Tensor la = train::actor_loss(bundle, batch, rng);

    // Critic: Bellman term plus the conservative gap
    // alpha * (w . Q(s, a'~pi, w) - w . Q(s, a_data, w)), one sample per state.
    ad::Tensor lc = train::critic_loss(bundle, batch, rng);
    if (alpha > 0.0) {
        ad::Mat states(B, bundle.spec.state_dim);
        ad::Mat actions(B, bundle.spec.action_dim);
        ad::Mat task(B, n);
        for (std::size_t i = 0; i < B; ++i) {
            const auto& t = batch.transitions[i];
            std::copy(t.state.begin(), t.state.end(),
                      states.d.data() + i * bundle.spec.state_dim);
            std::copy(t.action.begin(), t.action.end(),
                      actions.d.data() + i * bundle.spec.action_dim);
            std::copy(batch.prefs[i].weights().begin(), batch.prefs[i].weights().end(),
                      task.d.data() + i * n);
        }
        const ad::Mat conds = reg::conditioning_matrix(batch.prefs);
        const ad::Mat policy_actions = bundle.actor->sample_actions_raw(states, conds, rng);

        ad::Tensor task_c = ad::Tensor::constant(task);
        ad::Tensor policy_a = ad::Tensor::constant(policy_actions);
        ad::Tensor data_a = ad::Tensor::constant(actions);
        ad::Tensor gap;
        const std::size_t K = bundle.critics->n_critics();
        for (std::size_t k = 0; k < K; ++k) {
            ad::Tensor q_pi = bundle.critics->forward_graph(k, states, policy_a, conds);
            ad::Tensor q_data = bundle.critics->forward_graph(k, states, data_a, conds);
            ad::Tensor term = ad::mean_all(
                ad::sub(ad::sum_cols(ad::mul(q_pi, task_c)),
                        ad::sum_cols(ad::mul(q_data, task_c))));
            gap = gap.defined() ? ad::add(gap, term) : term;
        }
        lc = ad::add(lc, ad::scale(gap, alpha / static_cast<double>(K)));
    }
    return {la, lc};
}

ad::Tensor bc_p_loss(const train::PolicyBundle& bundle, const data::SampleBatch& batch,
                     nn::Rng& rng) {
    if (bundle.config.algo != "bcp") throw ConfigError("bc_p_loss: bundle is not bcp");
    const std::size_t B = batch.size();
    ad::Mat states(B, bundle.spec.state_dim);
    ad::Mat actions(B, bundle.spec.action_dim);
    for (std::size_t i = 0; i < B; ++i) {
        const auto& t = batch.transitions[i];
        std::copy(t.state.begin(), t.state.end(), states.d.data() + i * bundle.spec.state_dim);
        std::copy(t.action.begin(), t.action.end(),
                  actions.d.data() + i * bundle.spec.action_dim);
    }
    const ad::Mat conds = reg::conditioning_matrix(batch.prefs);
    return bundle.actor->bc_loss(states, conds, actions, rng);
}

} // namespace morl::baselines
