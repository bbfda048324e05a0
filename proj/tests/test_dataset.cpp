#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "morl/dataset.hpp"
#include "morl/errors.hpp"
#include "morl/metrics.hpp"

using namespace morl;
using namespace morl::data;

namespace {

env::EnvSpec lineworld() {
    auto [spec, st] = env::make_env("mo-lineworld", 0);
    (void)st;
    return spec;
}

bool datasets_equal(const OfflineDataset& a, const OfflineDataset& b) {
    if (a.env_name != b.env_name || a.objective_shift != b.objective_shift ||
        a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a.approx_prefs[i] == b.approx_prefs[i])) return false;
        if (a.trajectories[i].episode_return != b.trajectories[i].episode_return) return false;
        if (a.trajectories[i].transitions.size() != b.trajectories[i].transitions.size()) {
            return false;
        }
        for (std::size_t t = 0; t < a.trajectories[i].transitions.size(); ++t) {
            const auto& x = a.trajectories[i].transitions[t];
            const auto& y = b.trajectories[i].transitions[t];
            if (x.state != y.state || x.action != y.action || x.reward != y.reward ||
                x.next_state != y.next_state || x.terminal != y.terminal) {
                return false;
            }
        }
    }
    return true;
}

} // namespace

TEST_CASE("expert dataset returns lie on the oracle front") {
    const auto spec = lineworld();
    const auto ds = generate_dataset(spec, 100, 1.0, 0.0, PrefSamplerSpec::uniform(), 0);
    REQUIRE(ds.size() == 100);
    for (const auto& t : ds.trajectories) {
        // expert plays a = w0, so the return is (32*w0, 32*(1-w0)) on the frontier
        CHECK(t.episode_return[0] + t.episode_return[1] == doctest::Approx(32.0).epsilon(1e-6));
    }
    CHECK(ds.objective_shift == VectorReturn{0.0, 0.0}); // no-op on non-negative data
}

TEST_CASE("fixed-preference expert dataset pins approx prefs to the corner") {
    const auto spec = lineworld();
    const auto ds =
        generate_dataset(spec, 50, 1.0, 0.0, PrefSamplerSpec::fixed_pref(Preference({1, 0})), 0);
    REQUIRE(ds.size() == 50);
    for (const auto& p : ds.approx_prefs) {
        CHECK(p[0] == doctest::Approx(1.0));
        CHECK(p[1] == doctest::Approx(0.0));
    }
}

TEST_CASE("single-trajectory dataset is loadable and filterable") {
    const auto spec = lineworld();
    const auto ds = generate_dataset(spec, 1, 1.0, 0.0, PrefSamplerSpec::uniform(), 7);
    REQUIRE(ds.size() == 1);
    save_dataset(ds, "tiny.jsonl");
    const auto loaded = load_dataset("tiny.jsonl");
    CHECK(datasets_equal(ds, loaded));
    const auto filtered = filter_subdataset(loaded, loaded.approx_prefs[0], 0.0);
    CHECK(filtered.size() == 1);
    std::remove("tiny.jsonl");
}

TEST_CASE("corner mixture alternates corners round-robin") {
    const auto spec = lineworld();
    const auto ds = generate_dataset(spec, 10, 1.0, 0.0, PrefSamplerSpec::corners(), 0);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(ds.approx_prefs[i][i % 2 == 0 ? 0 : 1] == doctest::Approx(1.0));
    }
}

TEST_CASE("approx_behavior_pref examples") {
    Trajectory t;
    t.transitions.push_back({{0}, {0}, {3, 1}, {0}, true});
    t.episode_return = {3, 1};
    CHECK(approx_behavior_pref(t, {0, 0}).weights() == std::vector<double>{0.75, 0.25});

    t.transitions[0].reward = {0, 8};
    t.episode_return = {0, 8};
    CHECK(approx_behavior_pref(t, {0, 0}).weights() == std::vector<double>{0.0, 1.0});

    t.transitions[0].reward = {-1, 3};
    t.episode_return = {-1, 3};
    CHECK(approx_behavior_pref(t, {1, 0}).weights() == std::vector<double>{0.0, 1.0});
    CHECK_THROWS_AS(approx_behavior_pref(t, {0, 0}), DegenerateReturnError);
}

TEST_CASE("filter_subdataset thresholds") {
    const auto spec = lineworld();
    auto ds = generate_dataset(spec, 40, 1.0, 0.0, PrefSamplerSpec::uniform(), 3);

    const Preference target({1, 0});
    CHECK(filter_subdataset(ds, target, 1.0).size() == ds.size()); // theta=1 keeps everything

    // theta=0 keeps only colinear behavior preferences
    const auto strict = filter_subdataset(ds, target, 0.0);
    for (const auto& p : strict.approx_prefs) {
        CHECK(cosine_distance(target, p) <= 1e-12);
    }

    // spec example: distance of [0.5,0.5] to [1,0] is ~0.29289 (included at 2*theta=0.3),
    // distance of [0.2,0.8] is ~0.75746 (excluded)
    OfflineDataset hand;
    hand.env_name = spec.name;
    hand.objective_shift = {0, 0};
    auto mk = [&](double r0, double r1) {
        Trajectory t;
        t.transitions.push_back({{0, 1}, {0}, {r0, r1}, {0, 1}, true});
        t.episode_return = {r0, r1};
        hand.trajectories.push_back(t);
        hand.approx_prefs.push_back(approx_behavior_pref(t, hand.objective_shift));
    };
    mk(0.5, 0.5);
    mk(0.2, 0.8);
    CHECK(cosine_distance(target, hand.approx_prefs[0]) == doctest::Approx(0.29289).epsilon(1e-4));
    CHECK(cosine_distance(target, hand.approx_prefs[1]) == doctest::Approx(0.75746).epsilon(1e-4));
    const auto mid = filter_subdataset(hand, target, 0.15);
    REQUIRE(mid.size() == 1);
    CHECK(mid.approx_prefs[0][0] == doctest::Approx(0.5));

    // empty results are flagged, not errors
    const auto none = filter_subdataset(hand, target, 0.0);
    CHECK(none.size() == 0);
    CHECK(none.empty_filter_warning);
}

TEST_CASE("filter monotonicity in theta and predicate recheck") {
    const auto spec = lineworld();
    const auto ds = generate_dataset(spec, 60, 0.5, 0.4, PrefSamplerSpec::uniform(), 9);
    nn::Rng rng(1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double t = unit(rng);
        const Preference target({t, 1 - t});
        const double th1 = unit(rng), th2 = unit(rng);
        const double lo = std::min(th1, th2), hi = std::max(th1, th2);
        const auto small = filter_subdataset(ds, target, lo);
        const auto large = filter_subdataset(ds, target, hi);
        CHECK(small.size() <= large.size());
        // subset: every episode return in small appears in large
        for (const auto& tr : small.trajectories) {
            bool found = false;
            for (const auto& tr2 : large.trajectories) {
                if (tr2.episode_return == tr.episode_return) found = true;
            }
            CHECK(found);
        }
        // every survivor satisfies the threshold inequality
        for (const auto& p : small.approx_prefs) {
            CHECK(cosine_distance(target, p) <= 2.0 * lo + 1e-12);
        }
    }
}

TEST_CASE("ratio_subdataset keeps the nearest fraction") {
    const auto spec = lineworld();
    const auto ds = generate_dataset(spec, 30, 1.0, 0.0, PrefSamplerSpec::uniform(), 5);
    const Preference target({0.7, 0.3});

    CHECK(ratio_subdataset(ds, target, 1.0).size() == 30);
    CHECK(ratio_subdataset(ds, target, 1.0 / 30.0).size() == 1);

    // nesting property
    const auto r1 = ratio_subdataset(ds, target, 0.2);
    const auto r2 = ratio_subdataset(ds, target, 0.7);
    CHECK(r1.size() <= r2.size());
    for (const auto& tr : r1.trajectories) {
        bool found = false;
        for (const auto& tr2 : r2.trajectories) {
            if (tr2.episode_return == tr.episode_return) found = true;
        }
        CHECK(found);
    }
}

TEST_CASE("ratio_subdataset splits a mixed-corner dataset cleanly") {
    const auto spec = lineworld();
    const auto ds = generate_dataset(spec, 100, 1.0, 0.0, PrefSamplerSpec::corners(), 0);
    const auto near = ratio_subdataset(ds, Preference({1, 0}), 0.5);
    REQUIRE(near.size() == 50);
    for (const auto& p : near.approx_prefs) CHECK(p[0] == doctest::Approx(1.0));
}

TEST_CASE("sample_batch: theta=0 reproduces behavior preferences exactly") {
    const auto spec = lineworld();
    const auto ds = generate_dataset(spec, 20, 1.0, 0.0, PrefSamplerSpec::uniform(), 2);
    nn::Rng rng(0);
    const auto batch = sample_batch(ds, 64, 0.0, 0.2, rng);
    REQUIRE(batch.size() == 64);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        bool matches_some = false;
        for (const auto& p : ds.approx_prefs) {
            if (p == batch.prefs[i]) matches_some = true;
        }
        CHECK(matches_some);
        CHECK(batch.aug_prefs[i].bc_weight() == batch.bc_weights[i]);
    }
}

TEST_CASE("sample_batch: theta=1 preference marginal is uniform (chi-square, 20 bins)") {
    const auto spec = lineworld();
    const auto ds = generate_dataset(spec, 50, 1.0, 0.0, PrefSamplerSpec::uniform(), 4);
    nn::Rng rng(12345);
    const std::size_t n = 100000;
    std::vector<std::size_t> bins(20, 0);
    std::size_t batches = n / 500;
    for (std::size_t b = 0; b < batches; ++b) {
        const auto batch = sample_batch(ds, 500, 1.0, 0.2, rng);
        for (const auto& p : batch.prefs) {
            auto bin = static_cast<std::size_t>(p[0] * 20.0);
            if (bin >= 20) bin = 19;
            ++bins[bin];
        }
    }
    const double expect = static_cast<double>(n) / 20.0;
    double chi2 = 0.0;
    for (std::size_t c : bins) {
        const double d = static_cast<double>(c) - expect;
        chi2 += d * d / expect;
    }
    // dof = 19, critical value at p = 0.01 is 36.191
    CHECK(chi2 < 36.191);
}

TEST_CASE("sample_batch: bc weights are uniform on [wbc_min, 1]") {
    const auto spec = lineworld();
    const auto ds = generate_dataset(spec, 10, 1.0, 0.0, PrefSamplerSpec::uniform(), 8);
    nn::Rng rng(9);
    double sum = 0.0;
    std::size_t count = 0;
    for (int b = 0; b < 200; ++b) {
        const auto batch = sample_batch(ds, 500, 0.5, 0.2, rng);
        for (double w : batch.bc_weights) {
            CHECK(w >= 0.2);
            CHECK(w <= 1.0);
            sum += w;
            ++count;
        }
    }
    CHECK(sum / static_cast<double>(count) == doctest::Approx(0.6).epsilon(0.0167)); // 0.6 +- 0.01
}

TEST_CASE("sample_batch: reproducible and cap-supported") {
    const auto spec = lineworld();
    const auto ds = generate_dataset(spec, 25, 0.8, 0.3, PrefSamplerSpec::uniform(), 6);
    nn::Rng r1(77), r2(77);
    const auto b1 = sample_batch(ds, 128, 0.4, 0.25, r1);
    const auto b2 = sample_batch(ds, 128, 0.4, 0.25, r2);
    REQUIRE(b1.size() == b2.size());
    for (std::size_t i = 0; i < b1.size(); ++i) {
        CHECK(b1.prefs[i] == b2.prefs[i]);
        CHECK(b1.bc_weights[i] == b2.bc_weights[i]);
        CHECK(b1.transitions[i].state == b2.transitions[i].state);
    }
    // every draw lies inside the trajectory's cosine cap
    for (std::size_t i = 0; i < b1.size(); ++i) {
        double best = 2.0;
        for (const auto& p : ds.approx_prefs) {
            best = std::min(best, cosine_distance(p, b1.prefs[i]));
        }
        CHECK(best <= 2.0 * 0.4 + 1e-9);
    }
}

TEST_CASE("cap sampler: degenerate and full caps") {
    nn::Rng rng(3);
    const Preference center({0.3, 0.7});
    for (int i = 0; i < 50; ++i) {
        CHECK(sample_pref_in_cap(center, 0.0, rng) == center);
        const auto p = sample_pref_in_cap(center, 0.25, rng);
        CHECK(cosine_distance(p, center) <= 0.5 + 1e-12);
    }
    // n=3 rejection path
    const Preference c3({0.2, 0.3, 0.5});
    for (int i = 0; i < 50; ++i) {
        const auto p = sample_pref_in_cap(c3, 0.1, rng);
        CHECK(p.size() == 3);
        CHECK(cosine_distance(p, c3) <= 0.2 + 1e-12);
    }
}

TEST_CASE("save/load round trip is exact") {
    const auto spec = lineworld();
    const auto ds = generate_dataset(spec, 20, 0.5, 0.35, PrefSamplerSpec::uniform(), 11);
    save_dataset(ds, "roundtrip.jsonl");
    const auto loaded = load_dataset("roundtrip.jsonl");
    CHECK(datasets_equal(ds, loaded));
    std::remove("roundtrip.jsonl");
}

TEST_CASE("truncated and corrupted files produce named-line errors") {
    const auto spec = lineworld();
    const auto ds = generate_dataset(spec, 3, 1.0, 0.0, PrefSamplerSpec::uniform(), 1);
    save_dataset(ds, "broken.jsonl");

    // truncate the last line mid-JSON
    std::ifstream in("broken.jsonl");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    in.close();
    {
        std::ofstream out("broken.jsonl", std::ios::trunc);
        for (std::size_t i = 0; i + 1 < lines.size(); ++i) out << lines[i] << "\n";
        out << lines.back().substr(0, lines.back().size() / 2) << "\n";
    }
    try {
        load_dataset("broken.jsonl");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == static_cast<long>(lines.size()));
    }

    // an approx_pref inconsistent with the stored returns is an integrity error
    OfflineDataset tampered = ds;
    tampered.approx_prefs[1] = Preference({0.123456, 0.876544});
    save_dataset(tampered, "broken.jsonl");
    CHECK_THROWS_AS(load_dataset("broken.jsonl"), IntegrityError);
    std::remove("broken.jsonl");
}
