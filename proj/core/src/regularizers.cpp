#include "morl/regularizers.hpp"

#include <cmath>

#include "morl/errors.hpp"

namespace morl::reg {

namespace {

constexpr double kLogVarMin = -6.0;
constexpr double kLogVarMax = 6.0;

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

Family family_from_string(const std::string& s) {
    if (s == "mse") return Family::kMse;
    if (s == "cvae") return Family::kCvae;
    if (s == "diffusion") return Family::kDiffusion;
    throw ConfigError("unknown regularizer family '" + s + "'");
}

std::string to_string(Family f) {
    switch (f) {
        case Family::kMse: return "mse";
        case Family::kCvae: return "cvae";
        case Family::kDiffusion: return "diffusion";
    }
    return "?";
}

DiffusionSchedule::DiffusionSchedule(std::vector<double> betas_in) : betas(std::move(betas_in)) {
    if (betas.empty()) throw ConfigError("DiffusionSchedule: empty beta list");
    double running = 1.0;
    for (double b : betas) {
        if (!(b > 0.0) || b >= 1.0) throw ConfigError("DiffusionSchedule: beta outside (0,1)");
        alphas.push_back(1.0 - b);
        running *= (1.0 - b);
        if (!alpha_bars.empty() && running >= alpha_bars.back()) {
            throw ConfigError("DiffusionSchedule: alpha_bar not strictly decreasing");
        }
        alpha_bars.push_back(running);
    }
    if (alpha_bars.front() >= 1.0) throw ConfigError("DiffusionSchedule: alpha_bar[0] must be < 1");
}

DiffusionSchedule DiffusionSchedule::linear(std::size_t n_steps, double beta_lo, double beta_hi) {
    if (n_steps < 1) throw ConfigError("DiffusionSchedule: need at least one step");
    std::vector<double> betas(n_steps);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double f = n_steps == 1 ? 0.0
                                      : static_cast<double>(i) / static_cast<double>(n_steps - 1);
        betas[i] = beta_lo + f * (beta_hi - beta_lo);
    }
    return DiffusionSchedule(std::move(betas));
}

// --- MSE ---------------------------------------------------------------------

MseActor::MseActor(std::size_t state_dim, std::size_t cond_dim, std::size_t action_dim,
                   double action_scale, const std::vector<std::size_t>& hidden, nn::Rng& rng,
                   const std::string& name_prefix)
    : Actor(state_dim, cond_dim, action_dim, action_scale),
      net_({mlp_widths(state_dim + cond_dim, hidden, action_dim), nn::Activation::kRelu,
            nn::OutputActivation::kTanh},
           rng, name_prefix) {}

ad::Tensor MseActor::sample_actions_diff(const ad::Mat& states, const ad::Mat& conds,
                                         nn::Rng&) const {
    auto input = ad::Tensor::constant(hcat(states, conds));
    return ad::scale(net_.forward(input), action_scale_);
}

ad::Mat MseActor::sample_actions_raw(const ad::Mat& states, const ad::Mat& conds,
                                     nn::Rng&) const {
    ad::Mat out = net_.forward_raw(hcat(states, conds));
    for (double& x : out.d) x *= action_scale_;
    return out;
}

ad::Tensor MseActor::bc_loss_per_sample(const ad::Mat& states, const ad::Mat& conds,
                                        const ad::Mat& actions, nn::Rng& rng) const {
    ad::Tensor pred = sample_actions_diff(states, conds, rng);
    ad::Tensor diff = ad::sub(pred, ad::Tensor::constant(actions));
    // mean over action dimensions per sample
    return ad::scale(ad::sum_cols(ad::mul(diff, diff)), 1.0 / static_cast<double>(action_dim_));
}

std::vector<ad::Tensor> MseActor::parameters() const { return net_.parameters(); }

// --- CVAE --------------------------------------------------------------------

CvaeActor::CvaeActor(std::size_t state_dim, std::size_t cond_dim, std::size_t action_dim,
                     double action_scale, std::size_t latent_dim,
                     const std::vector<std::size_t>& hidden, nn::Rng& rng,
                     const std::string& name_prefix)
    : Actor(state_dim, cond_dim, action_dim, action_scale), latent_dim_(latent_dim),
      encoder_({mlp_widths(state_dim + action_dim + cond_dim, hidden, 2 * latent_dim),
                nn::Activation::kRelu, nn::OutputActivation::kNone},
               rng, name_prefix + ".encoder"),
      decoder_({mlp_widths(state_dim + latent_dim + cond_dim, hidden, action_dim),
                nn::Activation::kRelu, nn::OutputActivation::kTanh},
               rng, name_prefix + ".decoder") {
    if (latent_dim_ < 1) throw ConfigError("CvaeActor: latent_dim must be >= 1");
}

ad::Tensor CvaeActor::sample_actions_diff(const ad::Mat& states, const ad::Mat& conds,
                                          nn::Rng& rng) const {
    const ad::Mat z = gaussian_mat(states.rows, latent_dim_, rng);
    auto input = ad::Tensor::constant(hcat(hcat(states, z), conds));
    return ad::scale(decoder_.forward(input), action_scale_);
}

ad::Mat CvaeActor::sample_actions_raw(const ad::Mat& states, const ad::Mat& conds,
                                      nn::Rng& rng) const {
    const ad::Mat z = gaussian_mat(states.rows, latent_dim_, rng);
    ad::Mat out = decoder_.forward_raw(hcat(hcat(states, z), conds));
    for (double& x : out.d) x *= action_scale_;
    return out;
}

ad::Tensor CvaeActor::bc_loss_per_sample(const ad::Mat& states, const ad::Mat& conds,
                                         const ad::Mat& actions, nn::Rng& rng) const {
    auto enc_in = ad::Tensor::constant(hcat(hcat(states, actions), conds));
    ad::Tensor enc_out = encoder_.forward(enc_in);
    ad::Tensor mu = ad::slice_cols(enc_out, 0, latent_dim_);
    ad::Tensor logvar = ad::clamp(ad::slice_cols(enc_out, latent_dim_, 2 * latent_dim_),
                                  kLogVarMin, kLogVarMax);
    for (double v : logvar.value().d) {
        if (!std::isfinite(v)) throw NumericalError("cvae: non-finite log-variance");
    }

    // Reparameterized latent: z = mu + exp(logvar/2) * eps.
    ad::Tensor eps = ad::Tensor::constant(gaussian_mat(states.rows, latent_dim_, rng));
    ad::Tensor z = ad::add(mu, ad::mul(ad::exp_(ad::scale(logvar, 0.5)), eps));

    ad::Tensor states_c = ad::Tensor::constant(states);
    ad::Tensor conds_c = ad::Tensor::constant(conds);
    ad::Tensor dec_in = ad::concat_cols({states_c, z, conds_c});
    ad::Tensor recon = ad::scale(decoder_.forward(dec_in), action_scale_);

    ad::Tensor diff = ad::sub(recon, ad::Tensor::constant(actions));
    ad::Tensor recon_sse = ad::sum_cols(ad::mul(diff, diff)); // (B,1)

    // KL(q || N(0,I)) = 0.5 * sum(mu^2 + exp(lv) - 1 - lv)
    ad::Tensor kl_terms = ad::sub(ad::add(ad::mul(mu, mu), ad::exp_(logvar)),
                                  ad::add_scalar(logvar, 1.0));
    ad::Tensor kl = ad::scale(ad::sum_cols(kl_terms), 0.5); // (B,1)

    return ad::add(recon_sse, kl);
}

std::vector<ad::Tensor> CvaeActor::parameters() const {
    std::vector<ad::Tensor> out = encoder_.parameters();
    const auto dec = decoder_.parameters();
    out.insert(out.end(), dec.begin(), dec.end());
    return out;
}

// --- Diffusion ---------------------------------------------------------------

DiffusionActor::DiffusionActor(std::size_t state_dim, std::size_t cond_dim,
                               std::size_t action_dim, double action_scale,
                               DiffusionSchedule schedule,
                               const std::vector<std::size_t>& hidden, nn::Rng& rng,
                               const std::string& name_prefix)
    : Actor(state_dim, cond_dim, action_dim, action_scale), schedule_(std::move(schedule)),
      eps_net_({mlp_widths(action_dim + state_dim + cond_dim + 1, hidden, action_dim),
                nn::Activation::kMish, nn::OutputActivation::kNone},
               rng, name_prefix + ".eps") {}

ad::Tensor DiffusionActor::sample_actions_diff(const ad::Mat& states, const ad::Mat& conds,
                                               nn::Rng& rng) const {
    const std::size_t B = states.rows;
    const std::size_t n = schedule_.n_steps();
    ad::Tensor states_c = ad::Tensor::constant(states);
    ad::Tensor conds_c = ad::Tensor::constant(conds);
    ad::Tensor x = ad::Tensor::constant(gaussian_mat(B, action_dim_, rng));
    for (std::size_t step = n; step >= 1; --step) {
        const std::size_t i = step - 1;
        const double t_embed = static_cast<double>(step) / static_cast<double>(n);
        ad::Tensor t_col = ad::Tensor::constant(ad::Mat(B, 1, t_embed));
        ad::Tensor eps = eps_net_.forward(ad::concat_cols({x, states_c, conds_c, t_col}));
        const double coef = schedule_.betas[i] / std::sqrt(1.0 - schedule_.alpha_bars[i]);
        ad::Tensor mu = ad::scale(ad::sub(x, ad::scale(eps, coef)),
                                  1.0 / std::sqrt(schedule_.alphas[i]));
        if (step > 1) {
            ad::Mat noise = gaussian_mat(B, action_dim_, rng);
            const double sigma = std::sqrt(schedule_.betas[i]);
            for (double& v : noise.d) v *= sigma;
            x = ad::add(mu, ad::Tensor::constant(noise));
        } else {
            x = mu; // final step omits noise
        }
    }
    return ad::clamp(x, -action_scale_, action_scale_);
}

ad::Mat DiffusionActor::sample_actions_raw(const ad::Mat& states, const ad::Mat& conds,
                                           nn::Rng& rng) const {
    const std::size_t B = states.rows;
    const std::size_t n = schedule_.n_steps();
    ad::Mat x = gaussian_mat(B, action_dim_, rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t step = n; step >= 1; --step) {
        const std::size_t i = step - 1;
        const double t_embed = static_cast<double>(step) / static_cast<double>(n);
        ad::Mat in(B, action_dim_ + states.cols + conds.cols + 1);
        for (std::size_t r = 0; r < B; ++r) {
            double* row = in.d.data() + r * in.cols;
            std::copy_n(x.d.data() + r * action_dim_, action_dim_, row);
            std::copy_n(states.d.data() + r * states.cols, states.cols, row + action_dim_);
            std::copy_n(conds.d.data() + r * conds.cols, conds.cols,
                        row + action_dim_ + states.cols);
            row[in.cols - 1] = t_embed;
        }
        ad::Mat eps = eps_net_.forward_raw(in);
        const double coef = schedule_.betas[i] / std::sqrt(1.0 - schedule_.alpha_bars[i]);
        const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule_.alphas[i]);
        const double sigma = step > 1 ? std::sqrt(schedule_.betas[i]) : 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            double v = (x.d[k] - coef * eps.d[k]) * inv_sqrt_alpha;
            if (sigma > 0.0) v += sigma * normal(rng);
            x.d[k] = v;
        }
    }
    for (double& v : x.d) v = std::clamp(v, -action_scale_, action_scale_);
    return x;
}

ad::Tensor DiffusionActor::bc_loss_per_sample(const ad::Mat& states, const ad::Mat& conds,
                                              const ad::Mat& actions, nn::Rng& rng) const {
    const std::size_t B = states.rows;
    const std::size_t n = schedule_.n_steps();
    std::uniform_int_distribution<std::size_t> pick(1, n);
    ad::Mat eps = gaussian_mat(B, action_dim_, rng);
    ad::Mat noisy(B, action_dim_);
    ad::Mat t_col(B, 1);
    for (std::size_t r = 0; r < B; ++r) {
        const std::size_t step = pick(rng);
        const double ab = schedule_.alpha_bars[step - 1];
        const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
        for (std::size_t j = 0; j < action_dim_; ++j) {
            noisy.at(r, j) = sa * actions.at(r, j) + sb * eps.at(r, j);
        }
        t_col.d[r] = static_cast<double>(step) / static_cast<double>(n);
    }
    ad::Tensor in = ad::Tensor::constant(hcat(hcat(hcat(noisy, states), conds), t_col));
    ad::Tensor pred = eps_net_.forward(in);
    ad::Tensor diff = ad::sub(pred, ad::Tensor::constant(eps));
    return ad::sum_cols(ad::mul(diff, diff));
}

std::vector<ad::Tensor> DiffusionActor::parameters() const { return eps_net_.parameters(); }

// --- spec-surface wrappers -----------------------------------------------------

namespace {

void check_input(const Actor& actor, const ActorInput& input) {
    if (input.state.size() != actor.state_dim()) {
        throw std::invalid_argument("ActorInput: state dimension mismatch");
    }
    if (input.aug_pref.flat().size() != actor.cond_dim()) {
        throw std::invalid_argument("ActorInput: conditioning dimension mismatch");
    }
}

} // namespace

double bc_loss_mse(const MseActor& actor, const ActorInput& input,
                   const std::vector<double>& action) {
    check_input(actor, input);
    nn::Rng rng(0);
    return actor
        .bc_loss(ad::Mat::row(input.state), ad::Mat::row(input.aug_pref.flat()),
                 ad::Mat::row(action), rng)
        .value()
        .d[0];
}

double bc_loss_cvae(const CvaeActor& actor, const ActorInput& input,
                    const std::vector<double>& action, nn::Rng& rng) {
    check_input(actor, input);
    return actor
        .bc_loss(ad::Mat::row(input.state), ad::Mat::row(input.aug_pref.flat()),
                 ad::Mat::row(action), rng)
        .value()
        .d[0];
}

double bc_loss_diffusion(const DiffusionActor& actor, const ActorInput& input,
                         const std::vector<double>& action, nn::Rng& rng) {
    check_input(actor, input);
    return actor
        .bc_loss(ad::Mat::row(input.state), ad::Mat::row(input.aug_pref.flat()),
                 ad::Mat::row(action), rng)
        .value()
        .d[0];
}

std::vector<double> sample_action(const Actor& actor, const ActorInput& input, nn::Rng& rng) {
    check_input(actor, input);
    ad::Mat out = actor.sample_actions_raw(ad::Mat::row(input.state),
                                           ad::Mat::row(input.aug_pref.flat()), rng);
    return out.d;
}

ad::Mat conditioning_matrix(const std::vector<AugmentedPreference>& prefs) {
    if (prefs.empty()) throw std::invalid_argument("conditioning_matrix: empty batch");
    const std::size_t dim = prefs.front().n_objectives() + 1;
    ad::Mat out(prefs.size(), dim);
    for (std::size_t i = 0; i < prefs.size(); ++i) {
        const auto flat = prefs[i].flat();
        std::copy(flat.begin(), flat.end(), out.d.data() + i * dim);
    }
    return out;
}

ad::Mat conditioning_matrix(const std::vector<Preference>& prefs) {
    if (prefs.empty()) throw std::invalid_argument("conditioning_matrix: empty batch");
    const std::size_t dim = prefs.front().size();
    ad::Mat out(prefs.size(), dim);
    for (std::size_t i = 0; i < prefs.size(); ++i) {
        std::copy(prefs[i].weights().begin(), prefs[i].weights().end(), out.d.data() + i * dim);
    }
    return out;
}

} // namespace morl::reg
