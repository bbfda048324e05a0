#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "morl/baselines.hpp"
#include "morl/config.hpp"
#include "morl/dataset.hpp"
#include "morl/errors.hpp"
#include "morl/trainer.hpp"

using namespace morl;
using namespace morl::train;

namespace {

data::OfflineDataset lineworld_dataset(std::size_t n, std::uint64_t seed,
                                       data::PrefSamplerSpec sampler = data::PrefSamplerSpec::uniform()) {
    auto [spec, st] = env::make_env("mo-lineworld", 0);
    (void)st;
    return data::generate_dataset(spec, n, 1.0, 0.0, sampler, seed);
}

TrainConfig small_config(const std::string& algo) {
    TrainConfig c;
    c.algo = algo;
    c.hidden = {16, 16};
    c.batch_size = 16;
    c.total_iterations = 5;
    c.log_interval = 1;
    return c;
}

// bc-loss spy: fails the test if the critic target computation ever touches
// the behavior-cloning term (structural Eq.-13 assertion)
class TrappingActor final : public reg::Actor {
  public:
    TrappingActor(std::unique_ptr<reg::Actor> inner)
        : Actor(inner->state_dim(), inner->cond_dim(), inner->action_dim(),
                inner->action_scale()),
          inner_(std::move(inner)) {}
    reg::Family family() const override { return inner_->family(); }
    ad::Tensor sample_actions_diff(const ad::Mat& s, const ad::Mat& c,
                                   nn::Rng& rng) const override {
        return inner_->sample_actions_diff(s, c, rng);
    }
    ad::Mat sample_actions_raw(const ad::Mat& s, const ad::Mat& c, nn::Rng& rng) const override {
        return inner_->sample_actions_raw(s, c, rng);
    }
    ad::Tensor bc_loss_per_sample(const ad::Mat& s, const ad::Mat& c, const ad::Mat& a,
                                  nn::Rng& rng) const override {
        ++bc_calls;
        return inner_->bc_loss_per_sample(s, c, a, rng);
    }
    std::vector<ad::Tensor> parameters() const override { return inner_->parameters(); }
    mutable int bc_calls = 0;

  private:
    std::unique_ptr<reg::Actor> inner_;
};

} // namespace

TEST_CASE("config validation") {
    TrainConfig c = small_config("mse");
    c.theta = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config("nonsense");
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config("mse");
    c.wbc_min = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("critic loss: gamma=0 regresses the immediate reward") {
    const auto ds = lineworld_dataset(10, 0);
    TrainConfig c = small_config("mse");
    c.gamma = 0.0;
    auto [spec, st] = env::make_env("mo-lineworld", 0);
    (void)st;
    PolicyBundle bundle = make_bundle(c, spec);
    nn::Rng rng(0), rng2(0);
    const auto batch = data::sample_batch(ds, 8, 0.5, 0.2, rng);

    const double loss = critic_loss(bundle, batch, rng2).value().d[0];
    // recompute by hand: mean over batch and critics of ||r - Q||^2
    double expect = 0.0;
    for (std::size_t k = 0; k < bundle.critics->n_critics(); ++k) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
            ad::Mat s = ad::Mat::row(batch.transitions[i].state);
            ad::Mat a = ad::Mat::row(batch.transitions[i].action);
            ad::Mat cd = ad::Mat::row(batch.aug_prefs[i].flat());
            const ad::Mat q = bundle.critics->forward_raw(k, s, a, cd);
            for (std::size_t j = 0; j < 2; ++j) {
                const double d = batch.transitions[i].reward[j] - q.d[j];
                expect += d * d;
            }
        }
    }
    expect /= static_cast<double>(batch.size() * bundle.critics->n_critics());
    CHECK(loss == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("critic loss: terminal transitions drop the bootstrap at any gamma") {
    auto [spec, st] = env::make_env("mo-lineworld", 0);
    (void)st;
    TrainConfig c = small_config("mse");
    c.gamma = 0.99;
    PolicyBundle bundle = make_bundle(c, spec);

    // hand-built batch with a single terminal transition
    data::SampleBatch batch;
    Transition t;
    t.state = {0.2, 0.5};
    t.action = {0.3};
    t.reward = {1.0, 2.0};
    t.next_state = {0.21, 0.47};
    t.terminal = true;
    batch.transitions.push_back(t);
    batch.prefs.push_back(Preference({0.5, 0.5}));
    batch.bc_weights.push_back(0.5);
    batch.aug_prefs.push_back(augment(batch.prefs[0], 0.5));

    nn::Rng rng(0);
    const double loss_terminal = critic_loss(bundle, batch, rng).value().d[0];
    // gamma has no effect when the transition is terminal
    bundle.config.gamma = 0.0;
    nn::Rng rng2(0);
    const double loss_myopic = critic_loss(bundle, batch, rng2).value().d[0];
    CHECK(loss_terminal == doctest::Approx(loss_myopic).epsilon(1e-12));
}

TEST_CASE("actor loss: wbc=1 reduces to eta * bc loss") {
    auto [spec, st] = env::make_env("mo-lineworld", 0);
    (void)st;
    TrainConfig c = small_config("mse");
    c.eta = 7.0;
    c.wbc_min = 0.9999;
    PolicyBundle bundle = make_bundle(c, spec);

    data::SampleBatch batch;
    for (int i = 0; i < 4; ++i) {
        Transition t;
        t.state = {0.1 * i, 0.5};
        t.action = {0.2};
        t.reward = {0.5, 0.5};
        t.next_state = {0.1 * i + 0.01, 0.47};
        t.terminal = false;
        batch.transitions.push_back(t);
        batch.prefs.push_back(Preference({0.3, 0.7}));
        batch.bc_weights.push_back(1.0);
        batch.aug_prefs.push_back(augment(batch.prefs.back(), 1.0, 0.9999));
    }
    nn::Rng rng(0);
    const double la = actor_loss(bundle, batch, rng).value().d[0];

    // task part is exactly zero at wbc=1, so the Q term vanishes
    ad::Mat states(4, 2), conds(4, 3), actions(4, 1);
    for (int i = 0; i < 4; ++i) {
        states.at(i, 0) = batch.transitions[i].state[0];
        states.at(i, 1) = batch.transitions[i].state[1];
        const auto f = batch.aug_prefs[i].flat();
        std::copy(f.begin(), f.end(), conds.d.data() + i * 3);
        actions.d[i] = 0.2;
    }
    nn::Rng rng2(0);
    const double lbc = bundle.actor->bc_loss(states, conds, actions, rng2).value().d[0];
    CHECK(la == doctest::Approx(7.0 * lbc).epsilon(1e-9));
}

TEST_CASE("actor loss: zeroed critics leave only the weighted bc term") {
    auto [spec, st] = env::make_env("mo-lineworld", 0);
    (void)st;
    TrainConfig c = small_config("mse");
    c.eta = 3.0;
    PolicyBundle bundle = make_bundle(c, spec);
    for (auto& p : bundle.critics->online_parameters()) {
        std::fill(p.node()->value.d.begin(), p.node()->value.d.end(), 0.0);
    }

    const auto ds = lineworld_dataset(10, 1);
    nn::Rng rng(3);
    const auto batch = data::sample_batch(ds, 16, 1.0, 0.2, rng);
    nn::Rng rng2(0);
    const double la = actor_loss(bundle, batch, rng2).value().d[0];

    // expected: mean_i wbc_i * eta * Lbc_i
    ad::Mat states(16, 2), conds(16, 3), actions(16, 1);
    for (int i = 0; i < 16; ++i) {
        states.at(i, 0) = batch.transitions[i].state[0];
        states.at(i, 1) = batch.transitions[i].state[1];
        const auto f = batch.aug_prefs[i].flat();
        std::copy(f.begin(), f.end(), conds.d.data() + i * 3);
        actions.d[i] = batch.transitions[i].action[0];
    }
    nn::Rng rng3(0);
    ad::Tensor per = bundle.actor->bc_loss_per_sample(states, conds, actions, rng3);
    double expect = 0.0;
    for (int i = 0; i < 16; ++i) expect += batch.bc_weights[i] * 3.0 * per.value().d[i];
    expect /= 16.0;
    CHECK(la == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("actor loss gradient passes finite differences on a small bundle") {
    auto [spec, st] = env::make_env("mo-lineworld", 0);
    (void)st;
    TrainConfig c = small_config("mse");
    c.hidden = {6};
    PolicyBundle bundle = make_bundle(c, spec);
    const auto ds = lineworld_dataset(5, 2);
    nn::Rng rng(1);
    const auto batch = data::sample_batch(ds, 4, 0.5, 0.2, rng);
    auto loss_builder = [&] {
        nn::Rng fixed(11);
        return actor_loss(bundle, batch, fixed);
    };
    CHECK(nn::finite_diff_check(loss_builder, bundle.actor->parameters(), 1e-5) < 1e-4);
}

TEST_CASE("critic loss gradient passes finite differences on a small bundle") {
    auto [spec, st] = env::make_env("mo-lineworld", 0);
    (void)st;
    TrainConfig c = small_config("mse");
    c.hidden = {6};
    PolicyBundle bundle = make_bundle(c, spec);
    const auto ds = lineworld_dataset(5, 2);
    nn::Rng rng(1);
    const auto batch = data::sample_batch(ds, 4, 0.5, 0.2, rng);
    auto loss_builder = [&] {
        nn::Rng fixed(13);
        return critic_loss(bundle, batch, fixed);
    };
    CHECK(nn::finite_diff_check(loss_builder, bundle.critics->online_parameters(), 1e-5) < 1e-4);
}

TEST_CASE("structural: the critic target never evaluates the bc term") {
    auto [spec, st] = env::make_env("mo-lineworld", 0);
    (void)st;
    PolicyBundle bundle = make_bundle(small_config("mse"), spec);
    auto spy = std::make_unique<TrappingActor>(std::move(bundle.actor));
    TrappingActor* spy_ptr = spy.get();
    bundle.actor = std::move(spy);

    const auto ds = lineworld_dataset(8, 3);
    nn::Rng rng(0);
    const auto batch = data::sample_batch(ds, 8, 0.5, 0.2, rng);
    nn::Rng rng2(0);
    critic_loss(bundle, batch, rng2);
    CHECK(spy_ptr->bc_calls == 0); // V_bc never enters the bootstrap target

    nn::Rng rng3(0);
    actor_loss(bundle, batch, rng3);
    CHECK(spy_ptr->bc_calls == 1);
}

TEST_CASE("augmentation consistency inside sampled batches") {
    const auto ds = lineworld_dataset(10, 4);
    nn::Rng rng(5);
    const auto batch = data::sample_batch(ds, 64, 0.7, 0.2, rng);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double total = batch.aug_prefs[i].bc_weight();
        for (double x : batch.aug_prefs[i].task_part()) total += x;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("train: zero iterations returns the initialized bundle") {
    const auto ds = lineworld_dataset(5, 5);
    TrainConfig c = small_config("mse");
    c.total_iterations = 0;
    const auto result = morl::train::train(c, ds);
    CHECK(result.bundle.iteration == 0);
    CHECK(result.log.empty());

    // identical fresh bundle has identical parameters
    auto [spec, st] = env::make_env("mo-lineworld", 0);
    (void)st;
    const PolicyBundle fresh = make_bundle(c, spec);
    const auto a = result.bundle.all_parameters();
    const auto b = fresh.all_parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value().d == b[i].value().d);
}

TEST_CASE("train: identical config and seed give bit-identical checkpoints") {
    const auto ds = lineworld_dataset(10, 6);
    for (const char* algo : {"mse", "cvae", "diffusion", "mo-cql", "bcp"}) {
        TrainConfig c = small_config(algo);
        c.total_iterations = 30;
        const auto r1 = morl::train::train(c, ds);
        const auto r2 = morl::train::train(c, ds);
        const auto p1 = r1.bundle.all_parameters();
        const auto p2 = r2.bundle.all_parameters();
        REQUIRE(p1.size() == p2.size());
        for (std::size_t i = 0; i < p1.size(); ++i) {
            CHECK(p1[i].value().d == p2[i].value().d);
        }
    }
}

TEST_CASE("train writes metrics and checkpoints to the run directory") {
    const auto ds = lineworld_dataset(10, 7);
    TrainConfig c = small_config("mse");
    c.total_iterations = 10;
    c.checkpoint_interval = 5;
    const std::string dir = "train_run_dir";
    const auto result = morl::train::train(c, ds, dir);
    (void)result;
    CHECK(std::ifstream(dir + "/metrics.csv").good());
    CHECK(std::ifstream(dir + "/checkpoint.ckpt").good());
    CHECK(std::ifstream(dir + "/checkpoint_5.ckpt").good());

    // checkpoint round trip restores the bundle
    const PolicyBundle loaded = load_bundle(dir + "/checkpoint.ckpt");
    const auto a = result.bundle.all_parameters();
    const auto b = loaded.all_parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value().d == b[i].value().d);
    std::filesystem::remove_all(dir);
}

TEST_CASE("evaluate_policy: row count, determinism, null-action rollout") {
    auto [spec, st] = env::make_env("mo-lineworld", 0);
    (void)st;
    TrainConfig c = small_config("mse");
    PolicyBundle bundle = make_bundle(c, spec);
    // zero the actor output layer: tanh(0) = 0 action everywhere
    auto params = bundle.actor->parameters();
    auto& W = params[params.size() - 2];
    auto& b = params[params.size() - 1];
    std::fill(W.node()->value.d.begin(), W.node()->value.d.end(), 0.0);
    std::fill(b.node()->value.d.begin(), b.node()->value.d.end(), 0.0);

    const auto rows = evaluate_policy(bundle, spec, 101, 5, fixed_wbc(0.6), 0);
    REQUIRE(rows.size() == 101);
    for (const auto& [pref, ret] : rows) {
        CHECK(ret[0] == doctest::Approx(0.0));
        CHECK(ret[1] == doctest::Approx(32.0));
    }

    // deterministic env + deterministic policy: replica mean equals one rollout
    const auto once = evaluate_policy(bundle, spec, 11, 1, fixed_wbc(0.6), 3);
    const auto many = evaluate_policy(bundle, spec, 11, 5, fixed_wbc(0.6), 3);
    for (std::size_t k = 0; k < once.size(); ++k) {
        CHECK(once[k].second[0] == doctest::Approx(many[k].second[0]));
        CHECK(once[k].second[1] == doctest::Approx(many[k].second[1]));
    }
}

TEST_CASE("monotone cloning limit: wbc_min=1 reproduces behavior cloning") {
    // 50-trajectory expert dataset; all bc weight, no value guidance
    const auto ds = lineworld_dataset(50, 8);
    TrainConfig c = small_config("mse");
    c.wbc_min = 1.0;
    c.eta = 1.0;
    c.learning_rate = 1e-3;
    c.hidden = {32, 32};
    c.batch_size = 64;
    c.total_iterations = 4000;
    c.log_interval = 1000;
    const auto result = morl::train::train(c, ds);

    nn::Rng rng(0);
    double worst = 0.0;
    for (std::size_t t = 0; t < ds.size(); t += 5) {
        const auto& traj = ds.trajectories[t];
        const auto aug = augment(ds.approx_prefs[t], 1.0, 1.0);
        for (std::size_t i = 0; i < traj.transitions.size(); i += 8) {
            const reg::ActorInput in{traj.transitions[i].state, aug};
            const auto a = reg::sample_action(*result.bundle.actor, in, rng);
            worst = std::max(worst, std::abs(a[0] - traj.transitions[i].action[0]));
        }
    }
    CHECK(worst < 0.1);
}

TEST_CASE("train rejects mismatched datasets") {
    const auto ds = lineworld_dataset(5, 9);
    TrainConfig c = small_config("mse");
    c.env_name = "mo-treasure";
    CHECK_THROWS_AS(morl::train::train(c, ds), ConfigError);
}
