#include "morl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "morl/baselines.hpp"
#include "morl/config.hpp"
#include "morl/errors.hpp"

namespace morl::train {

namespace {

ad::Mat states_matrix(const std::vector<Transition>& ts, bool next) {
    const std::size_t dim = next ? ts.front().next_state.size() : ts.front().state.size();
    ad::Mat m(ts.size(), dim);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto& v = next ? ts[i].next_state : ts[i].state;
        std::copy(v.begin(), v.end(), m.d.data() + i * dim);
    }
    return m;
}

ad::Mat actions_matrix(const std::vector<Transition>& ts) {
    const std::size_t dim = ts.front().action.size();
    ad::Mat m(ts.size(), dim);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        std::copy(ts[i].action.begin(), ts[i].action.end(), m.d.data() + i * dim);
    }
    return m;
}

ad::Mat rewards_matrix(const std::vector<Transition>& ts) {
    const std::size_t dim = ts.front().reward.size();
    ad::Mat m(ts.size(), dim);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        std::copy(ts[i].reward.begin(), ts[i].reward.end(), m.d.data() + i * dim);
    }
    return m;
}

} // namespace

void TrainConfig::validate() const {
    if (algo != "mse" && algo != "cvae" && algo != "diffusion" && algo != "mo-cql" &&
        algo != "bcp") {
        throw ConfigError("unknown algo '" + algo + "'");
    }
    if (theta < 0.0 || theta > 1.0) throw ConfigError("theta outside [0,1]");
    if (!(wbc_min > 0.0) || wbc_min > 1.0) throw ConfigError("wbc_min outside (0,1]");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma outside [0,1]");
    if (n_critics < 1) throw ConfigError("n_critics must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(polyak_tau > 0.0) || polyak_tau > 1.0) throw ConfigError("polyak_tau outside (0,1]");
    if (eta < 0.0) throw ConfigError("eta must be >= 0");
    if (cql_alpha < 0.0) throw ConfigError("cql_alpha must be >= 0");
    if (hidden.empty()) throw ConfigError("hidden layer list must not be empty");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// --- CriticEnsemble ----------------------------------------------------------

CriticEnsemble::CriticEnsemble(std::size_t state_dim, std::size_t action_dim,
                               std::size_t cond_dim, std::size_t n_objectives,
                               std::size_t n_critics, const std::vector<std::size_t>& hidden,
                               nn::Rng& rng)
    : n_objectives_(n_objectives) {
    std::vector<std::size_t> widths;
    widths.push_back(state_dim + action_dim + cond_dim);
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(n_objectives);
    for (std::size_t k = 0; k < n_critics; ++k) {
        online_.emplace_back(nn::MlpConfig{widths, nn::Activation::kRelu,
                                           nn::OutputActivation::kNone},
                             rng, "critic" + std::to_string(k));
        target_.emplace_back(nn::MlpConfig{widths, nn::Activation::kRelu,
                                           nn::OutputActivation::kNone},
                             rng, "critic" + std::to_string(k) + ".target");
        auto tp = target_.back().parameters();
        nn::copy_parameters(tp, online_.back().parameters());
    }
}

ad::Tensor CriticEnsemble::forward_graph(std::size_t k, const ad::Mat& states,
                                         const ad::Tensor& actions, const ad::Mat& conds) const {
    ad::Tensor in = ad::concat_cols(
        {ad::Tensor::constant(states), actions, ad::Tensor::constant(conds)});
    return online_[k].forward(in);
}

namespace {
ad::Mat critic_input(const ad::Mat& states, const ad::Mat& actions, const ad::Mat& conds) {
    ad::Mat in(states.rows, states.cols + actions.cols + conds.cols);
    for (std::size_t i = 0; i < states.rows; ++i) {
        double* row = in.d.data() + i * in.cols;
        std::copy_n(states.d.data() + i * states.cols, states.cols, row);
        std::copy_n(actions.d.data() + i * actions.cols, actions.cols, row + states.cols);
        std::copy_n(conds.d.data() + i * conds.cols, conds.cols,
                    row + states.cols + actions.cols);
    }
    return in;
}
} // namespace

ad::Mat CriticEnsemble::forward_raw(std::size_t k, const ad::Mat& states, const ad::Mat& actions,
                                    const ad::Mat& conds) const {
    return online_[k].forward_raw(critic_input(states, actions, conds));
}

ad::Mat CriticEnsemble::target_raw(std::size_t k, const ad::Mat& states, const ad::Mat& actions,
                                   const ad::Mat& conds) const {
    return target_[k].forward_raw(critic_input(states, actions, conds));
}

ad::Mat CriticEnsemble::combined_target(const ad::Mat& states, const ad::Mat& actions,
                                        const ad::Mat& conds,
                                        const ad::Mat& task_weights) const {
    const std::size_t B = states.rows;
    std::vector<ad::Mat> qs;
    qs.reserve(online_.size());
    for (std::size_t k = 0; k < target_.size(); ++k) {
        qs.push_back(target_raw(k, states, actions, conds));
    }
    ad::Mat out(B, n_objectives_);
    for (std::size_t i = 0; i < B; ++i) {
        std::size_t best_k = 0;
        double best = 0.0;
        for (std::size_t k = 0; k < qs.size(); ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < n_objectives_; ++j) {
                s += task_weights.at(i, j) * qs[k].at(i, j);
            }
            if (k == 0 || s < best) {
                best = s;
                best_k = k;
            }
        }
        for (std::size_t j = 0; j < n_objectives_; ++j) out.at(i, j) = qs[best_k].at(i, j);
    }
    return out;
}

void CriticEnsemble::polyak(double tau) {
    for (std::size_t k = 0; k < online_.size(); ++k) {
        auto tp = target_[k].parameters();
        nn::polyak_update(tp, online_[k].parameters(), tau);
    }
}

std::vector<ad::Tensor> CriticEnsemble::online_parameters() const {
    std::vector<ad::Tensor> out;
    for (const auto& c : online_) {
        const auto p = c.parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

std::vector<ad::Tensor> CriticEnsemble::target_parameters() const {
    std::vector<ad::Tensor> out;
    for (const auto& c : target_) {
        const auto p = c.parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

// --- PolicyBundle ------------------------------------------------------------

std::size_t PolicyBundle::cond_dim() const {
    return augmented() ? spec.n_objectives + 1 : spec.n_objectives;
}

std::vector<ad::Tensor> PolicyBundle::all_parameters() const {
    std::vector<ad::Tensor> out = actor->parameters();
    if (critics) {
        auto on = critics->online_parameters();
        auto tg = critics->target_parameters();
        out.insert(out.end(), on.begin(), on.end());
        out.insert(out.end(), tg.begin(), tg.end());
    }
    return out;
}

PolicyBundle make_bundle(const TrainConfig& config, const env::EnvSpec& spec) {
    config.validate();
    if (config.env_name != spec.name) {
        throw ConfigError("make_bundle: config env '" + config.env_name +
                          "' does not match spec '" + spec.name + "'");
    }
    double scale = spec.action_high.front();
    for (std::size_t i = 0; i < spec.action_dim; ++i) {
        if (spec.action_low[i] != -spec.action_high[i] || spec.action_high[i] != scale) {
            throw ConfigError("make_bundle: actors assume symmetric uniform action bounds");
        }
    }

    PolicyBundle b;
    b.config = config;
    b.spec = spec;
    nn::Rng init_rng(config.seed);
    const std::size_t cond = config.uses_augmented_conditioning() ? spec.n_objectives + 1
                                                                  : spec.n_objectives;
    if (config.algo == "mse") {
        b.actor = std::make_unique<reg::MseActor>(spec.state_dim, cond, spec.action_dim, scale,
                                                  config.hidden, init_rng);
    } else if (config.algo == "cvae") {
        const std::size_t latent =
            config.latent_dim > 0 ? config.latent_dim : 2 * spec.action_dim;
        b.actor = std::make_unique<reg::CvaeActor>(spec.state_dim, cond, spec.action_dim, scale,
                                                   latent, config.hidden, init_rng);
    } else if (config.algo == "diffusion") {
        b.actor = std::make_unique<reg::DiffusionActor>(
            spec.state_dim, cond, spec.action_dim, scale,
            reg::DiffusionSchedule::linear(config.diffusion_steps, config.diffusion_beta_lo,
                                           config.diffusion_beta_hi),
            config.hidden, init_rng);
    } else if (config.algo == "mo-cql") {
        b.actor = std::make_unique<baselines::GaussianActor>(spec.state_dim, cond,
                                                             spec.action_dim, scale,
                                                             config.hidden, init_rng);
    } else if (config.algo == "bcp") {
        b.actor = std::make_unique<reg::MseActor>(spec.state_dim, cond, spec.action_dim, scale,
                                                  config.hidden, init_rng, "actor.bcp");
    }
    if (config.algo != "bcp") {
        b.critics.emplace(spec.state_dim, spec.action_dim, cond, spec.n_objectives,
                          config.n_critics, config.hidden, init_rng);
    }
    nn::AdamConfig adam{config.learning_rate, config.adam_beta1, config.adam_beta2,
                        config.adam_eps};
    b.actor_opt = std::make_unique<nn::Adam>(b.actor->parameters(), adam);
    if (b.critics) {
        b.critic_opt = std::make_unique<nn::Adam>(b.critics->online_parameters(), adam);
    }
    return b;
}

namespace {

// Per-sample task weights: the scalarization used for ensemble combination and
// the actor objective. Augmented runs use the task part (1-wbc)*w.
ad::Mat task_matrix(const PolicyBundle& bundle, const data::SampleBatch& batch) {
    const std::size_t n = bundle.spec.n_objectives;
    ad::Mat m(batch.size(), n);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (bundle.augmented()) {
            const auto& tp = batch.aug_prefs[i].task_part();
            std::copy(tp.begin(), tp.end(), m.d.data() + i * n);
        } else {
            const auto& w = batch.prefs[i].weights();
            std::copy(w.begin(), w.end(), m.d.data() + i * n);
        }
    }
    return m;
}

ad::Mat cond_matrix(const PolicyBundle& bundle, const data::SampleBatch& batch) {
    return bundle.augmented() ? reg::conditioning_matrix(batch.aug_prefs)
                              : reg::conditioning_matrix(batch.prefs);
}

// min_k task.Q_k selection applied to graph tensors: sum_k mask_k * (task.Q_k).
ad::Tensor selected_scalarized_q(const PolicyBundle& bundle, const ad::Mat& states,
                                 const ad::Tensor& actions, const ad::Mat& conds,
                                 const ad::Mat& task) {
    const std::size_t B = states.rows;
    const std::size_t K = bundle.critics->n_critics();
    std::vector<ad::Tensor> scalarized;
    scalarized.reserve(K);
    ad::Tensor task_c = ad::Tensor::constant(task);
    for (std::size_t k = 0; k < K; ++k) {
        ad::Tensor q = bundle.critics->forward_graph(k, states, actions, conds);
        scalarized.push_back(ad::sum_cols(ad::mul(q, task_c))); // (B,1)
    }
    if (K == 1) return scalarized[0];
    std::vector<std::size_t> argmin(B, 0);
    for (std::size_t i = 0; i < B; ++i) {
        double best = scalarized[0].value().d[i];
        for (std::size_t k = 1; k < K; ++k) {
            const double v = scalarized[k].value().d[i];
            if (v < best) {
                best = v;
                argmin[i] = k;
            }
        }
    }
    ad::Tensor out;
    for (std::size_t k = 0; k < K; ++k) {
        ad::Mat mask(B, 1, 0.0);
        bool any = false;
        for (std::size_t i = 0; i < B; ++i) {
            if (argmin[i] == k) {
                mask.d[i] = 1.0;
                any = true;
            }
        }
        if (!any) continue;
        ad::Tensor term = ad::mul(scalarized[k], ad::Tensor::constant(mask));
        out = out.defined() ? ad::add(out, term) : term;
    }
    return out;
}

} // namespace

ad::Tensor critic_loss(const PolicyBundle& bundle, const data::SampleBatch& batch, nn::Rng& rng) {
    if (batch.size() == 0) throw std::invalid_argument("critic_loss: empty batch");
    if (!bundle.critics) throw ConfigError("critic_loss: bundle has no critics");
    const ad::Mat states = states_matrix(batch.transitions, false);
    const ad::Mat next_states = states_matrix(batch.transitions, true);
    const ad::Mat actions = actions_matrix(batch.transitions);
    const ad::Mat rewards = rewards_matrix(batch.transitions);
    const ad::Mat conds = cond_matrix(bundle, batch);
    const ad::Mat task = task_matrix(bundle, batch);
    const std::size_t B = batch.size();
    const std::size_t n = bundle.spec.n_objectives;

    // Bootstrap: a' ~ pi(.|s', w-hat), pessimistic ensemble-combined vector.
    const ad::Mat next_actions = bundle.actor->sample_actions_raw(next_states, conds, rng);
    const ad::Mat boot = bundle.critics->combined_target(next_states, next_actions, conds, task);
    ad::Mat y(B, n);
    for (std::size_t i = 0; i < B; ++i) {
        const double cont = batch.transitions[i].terminal ? 0.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = rewards.at(i, j) + bundle.config.gamma * cont * boot.at(i, j);
            if (!std::isfinite(v)) {
                throw NumericalError("critic_loss: non-finite target at transition " +
                                     std::to_string(i));
            }
            y.at(i, j) = v;
        }
    }

    ad::Tensor loss;
    const ad::Tensor y_c = ad::Tensor::constant(y);
    const ad::Tensor actions_c = ad::Tensor::constant(actions);
    for (std::size_t k = 0; k < bundle.critics->n_critics(); ++k) {
        ad::Tensor q = bundle.critics->forward_graph(k, states, actions_c, conds);
        ad::Tensor diff = ad::sub(y_c, q);
        ad::Tensor term = ad::mean_all(ad::sum_cols(ad::mul(diff, diff)));
        loss = loss.defined() ? ad::add(loss, term) : term;
    }
    return ad::scale(loss, 1.0 / static_cast<double>(bundle.critics->n_critics()));
}

ad::Tensor actor_loss(const PolicyBundle& bundle, const data::SampleBatch& batch, nn::Rng& rng) {
    if (batch.size() == 0) throw std::invalid_argument("actor_loss: empty batch");
    const ad::Mat states = states_matrix(batch.transitions, false);
    const ad::Mat actions = actions_matrix(batch.transitions);
    const ad::Mat conds = cond_matrix(bundle, batch);
    const std::size_t B = batch.size();

    if (bundle.config.algo == "bcp") {
        return bundle.actor->bc_loss(states, conds, actions, rng);
    }

    const ad::Mat task = task_matrix(bundle, batch);
    ad::Tensor sampled = bundle.actor->sample_actions_diff(states, conds, rng);
    ad::Tensor q_sel = selected_scalarized_q(bundle, states, sampled, conds, task); // (B,1)

    if (!bundle.augmented()) { // plain scalarized actor objective (MO-CQL)
        return ad::mean_all(ad::scale(q_sel, -1.0));
    }

    ad::Tensor lbc = bundle.actor->bc_loss_per_sample(states, conds, actions, rng); // (B,1)
    ad::Mat wbc_eta(B, 1);
    for (std::size_t i = 0; i < B; ++i) {
        wbc_eta.d[i] = batch.bc_weights[i] * bundle.config.eta;
    }
    // loss_i = wbc_i * eta * Lbc_i - task_i . Q_i
    ad::Tensor weighted = ad::mul(lbc, ad::Tensor::constant(wbc_eta));
    return ad::mean_all(ad::sub(weighted, q_sel));
}

// --- training loop -----------------------------------------------------------

namespace {

void write_metrics_csv(const std::string& path, const std::vector<LogRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    out << "iteration,critic_loss,actor_loss,mean_wbc,wall_ms\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.iteration << ',' << r.critic_loss << ',' << r.actor_loss << ',' << r.mean_wbc
            << ',' << r.wall_ms << "\n";
    }
}

} // namespace

TrainResult train(const TrainConfig& config, const data::OfflineDataset& ds,
                  const std::string& run_dir, const std::string& config_hash_in) {
    config.validate();
    if (ds.env_name != config.env_name) {
        throw ConfigError("train: dataset env '" + ds.env_name + "' does not match config env '" +
                          config.env_name + "'");
    }
    if (ds.size() == 0) throw std::invalid_argument("train: empty dataset");

    auto [spec, st0] = env::make_env(config.env_name, config.seed);
    (void)st0;
    TrainResult result{make_bundle(config, spec), {}};
    PolicyBundle& bundle = result.bundle;
    const std::string hash =
        config_hash_in.empty() ? config::config_hash(config) : config_hash_in;

    if (!run_dir.empty()) std::filesystem::create_directories(run_dir);

    nn::Rng batch_rng(mix_seed(config.seed, 1, 0));
    nn::Rng loss_rng(mix_seed(config.seed, 2, 0));

    const auto t_start = std::chrono::steady_clock::now();
    for (std::size_t it = 1; it <= config.total_iterations; ++it) {
        const data::SampleBatch batch =
            config.algo == "bcp"
                ? data::sample_bc_batch(ds, config.batch_size, batch_rng)
                : data::sample_batch(ds, config.batch_size, config.theta, config.wbc_min,
                                     batch_rng);

        double actor_loss_value = 0.0;
        double critic_loss_value = 0.0;

        // Algorithm order: policy step first, then critic step, then targets.
        ad::Tensor la, lc;
        if (config.algo == "mo-cql") {
            std::tie(la, lc) = baselines::mo_cql_losses(bundle, batch, config.cql_alpha,
                                                        loss_rng);
        } else {
            la = actor_loss(bundle, batch, loss_rng);
        }
        actor_loss_value = la.value().d[0];
        if (!std::isfinite(actor_loss_value)) {
            throw NumericalError("train: non-finite actor loss at iteration " +
                                 std::to_string(it));
        }
        ad::backward(la);
        bundle.actor_opt->step();
        if (bundle.critic_opt) bundle.critic_opt->zero_grad(); // Q-term spill

        if (bundle.critics) {
            if (!lc.defined()) lc = critic_loss(bundle, batch, loss_rng);
            critic_loss_value = lc.value().d[0];
            if (!std::isfinite(critic_loss_value)) {
                throw NumericalError("train: non-finite critic loss at iteration " +
                                     std::to_string(it) + " (actor_loss=" +
                                     std::to_string(actor_loss_value) + ")");
            }
            ad::backward(lc);
            bundle.critic_opt->step();
            bundle.critics->polyak(config.polyak_tau);
        }

        bundle.iteration = it;
        if (it % config.log_interval == 0 || it == config.total_iterations) {
            double mean_wbc = 0.0;
            for (double w : batch.bc_weights) mean_wbc += w;
            mean_wbc /= static_cast<double>(batch.bc_weights.size());
            const double wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          t_start)
                    .count();
            result.log.push_back({it, critic_loss_value, actor_loss_value, mean_wbc, wall_ms});
        }
        if (!run_dir.empty() && config.checkpoint_interval > 0 &&
            it % config.checkpoint_interval == 0) {
            save_bundle(run_dir + "/checkpoint_" + std::to_string(it) + ".ckpt", bundle, hash);
        }
    }

    if (!run_dir.empty()) {
        write_metrics_csv(run_dir + "/metrics.csv", result.log);
        save_bundle(run_dir + "/checkpoint.ckpt", bundle, hash);
    }
    return result;
}

WbcSource fixed_wbc(double value) {
    return [value](const Preference&, std::size_t) { return value; };
}

std::vector<double> conditioning_for(const PolicyBundle& bundle, const Preference& pref,
                                     double wbc) {
    if (bundle.augmented()) {
        return augment(pref, wbc, bundle.config.wbc_min).flat();
    }
    return pref.weights();
}

Trajectory rollout_policy(const PolicyBundle& bundle, const env::EnvSpec& spec,
                          const std::vector<double>& conditioning, std::uint64_t seed) {
    nn::Rng rng(seed);
    const ad::Mat cond_row = ad::Mat::row(conditioning);
    return env::rollout(spec, env::initial_state(spec, seed),
                        [&](const env::EnvSpec&, const env::EnvState& st) {
                            ad::Mat out = bundle.actor->eval_actions(
                                ad::Mat::row(st.observation), cond_row, rng);
                            return out.d;
                        });
}

std::vector<std::pair<Preference, VectorReturn>> evaluate_policy(
    const PolicyBundle& bundle, const env::EnvSpec& spec, std::size_t n_prefs,
    std::size_t episodes_per_pref, const WbcSource& wbc, std::uint64_t seed) {
    if (n_prefs < 2) throw std::invalid_argument("evaluate_policy: need at least 2 preferences");
    if (episodes_per_pref < 1) throw std::invalid_argument("evaluate_policy: need episodes");
    if (spec.n_objectives != 2) {
        throw UnsupportedError("evaluate_policy: the equidistant grid is defined for 2 objectives");
    }
    std::vector<std::pair<Preference, VectorReturn>> rows;
    rows.reserve(n_prefs);
    for (std::size_t k = 0; k < n_prefs; ++k) {
        const double w0 = static_cast<double>(k) / static_cast<double>(n_prefs - 1);
        Preference pref({w0, 1.0 - w0});
        const double wbc_value = bundle.augmented() ? wbc(pref, k) : 0.0;
        const auto cond = conditioning_for(bundle, pref, wbc_value);
        VectorReturn mean(spec.n_objectives, 0.0);
        for (std::size_t e = 0; e < episodes_per_pref; ++e) {
            const Trajectory traj = rollout_policy(bundle, spec, cond, mix_seed(seed, k, e));
            for (std::size_t j = 0; j < spec.n_objectives; ++j) {
                mean[j] += traj.episode_return[j];
            }
        }
        for (double& v : mean) v /= static_cast<double>(episodes_per_pref);
        rows.emplace_back(std::move(pref), std::move(mean));
    }
    return rows;
}

void save_bundle(const std::string& path, const PolicyBundle& bundle,
                 const std::string& config_hash) {
    nn::CheckpointHeader h;
    h.kind = "policy-bundle";
    h.config_json = config::train_config_to_json(bundle.config);
    h.config_hash = config_hash.empty() ? config::config_hash(bundle.config) : config_hash;
    h.seed = bundle.config.seed;
    nn::save_checkpoint(path, h, bundle.all_parameters());
}

PolicyBundle load_bundle(const std::string& path) {
    const nn::CheckpointHeader h = nn::peek_checkpoint(path);
    if (h.kind != "policy-bundle") throw IntegrityError("checkpoint kind is not policy-bundle");
    const TrainConfig config = config::train_config_from_json(h.config_json);
    auto [spec, st0] = env::make_env(config.env_name, config.seed);
    (void)st0;
    PolicyBundle bundle = make_bundle(config, spec);
    auto params = bundle.all_parameters();
    nn::load_checkpoint(path, params);
    return bundle;
}

} // namespace morl::train
