#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "morl/types.hpp"

using namespace morl;

TEST_CASE("preference invariants") {
    CHECK_THROWS_AS(Preference({1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Preference({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(Preference({-0.1, 1.1}), std::invalid_argument);
    CHECK_NOTHROW(Preference({0.5, 0.5}));
    CHECK_NOTHROW(Preference({0.2, 0.3, 0.5}));
}

TEST_CASE("scalarize examples") {
    CHECK(scalarize(Preference({1, 0}), {3, 5}) == doctest::Approx(3.0));
    CHECK(scalarize(Preference({0.5, 0.5}), {2, 4}) == doctest::Approx(3.0));
    // direct dot-product cross-check against an independently coded loop
    const Preference w({0.25, 0.75});
    const VectorReturn v{4, 0};
    double expect = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) expect += w.weights()[i] * v[i];
    CHECK(scalarize(w, v) == doctest::Approx(expect));
    CHECK(expect == doctest::Approx(1.0));
    CHECK_THROWS_AS(scalarize(Preference({0.5, 0.5}), {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("scalarize linearity property") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double t = unit(rng);
        Preference w({t, 1.0 - t});
        VectorReturn u{unit(rng) * 10, unit(rng) * 10};
        VectorReturn v{unit(rng) * 10, unit(rng) * 10};
        const double a = unit(rng) * 3, b = unit(rng) * 3;
        VectorReturn comb{a * u[0] + b * v[0], a * u[1] + b * v[1]};
        CHECK(scalarize(w, comb) ==
              doctest::Approx(a * scalarize(w, u) + b * scalarize(w, v)).epsilon(1e-9));
    }
}

TEST_CASE("cosine distance examples and properties") {
    CHECK(cosine_distance(Preference({1, 0}), Preference({1, 0})) == doctest::Approx(0.0));
    CHECK(cosine_distance(Preference({1, 0}), Preference({0, 1})) == doctest::Approx(1.0));
    CHECK(cosine_distance(Preference({0.5, 0.5}), Preference({1, 0})) ==
          doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)));
    CHECK_THROWS_AS(cosine_distance(std::vector<double>{0, 0}, std::vector<double>{1, 0}),
                    std::invalid_argument);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.01, 0.99);
    for (int trial = 0; trial < 100; ++trial) {
        Preference a({unit(rng), 0.0}), b({unit(rng), 0.0});
        // fix simplex: rebuild with complements
        a = Preference({a.weights()[0], 1.0 - a.weights()[0]});
        b = Preference({b.weights()[0], 1.0 - b.weights()[0]});
        CHECK(cosine_distance(a, b) == doctest::Approx(cosine_distance(b, a)).epsilon(1e-12));
        // zero iff positive scalar multiples: on the simplex that means equal
        if (std::abs(a.weights()[0] - b.weights()[0]) > 1e-6) {
            CHECK(cosine_distance(a, b) > 0.0);
        }
        CHECK(cosine_distance(a, a) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("l1_normalize examples and scale invariance") {
    CHECK(l1_normalize({3, 1}).weights() == std::vector<double>{0.75, 0.25});
    CHECK(l1_normalize({5, 0}).weights() == std::vector<double>{1.0, 0.0});
    CHECK(l1_normalize({2, 2, 4}).weights() == std::vector<double>{0.25, 0.25, 0.5});
    CHECK_THROWS_AS(l1_normalize({0, 0}), DegenerateReturnError);
    CHECK_THROWS_AS(l1_normalize({-1, 3}), DegenerateReturnError);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.1, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        VectorReturn v{unit(rng), unit(rng), unit(rng)};
        const double c = unit(rng);
        VectorReturn cv{c * v[0], c * v[1], c * v[2]};
        const auto p1 = l1_normalize(v).weights();
        const auto p2 = l1_normalize(cv).weights();
        for (std::size_t i = 0; i < 3; ++i) CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-9));
    }
}

TEST_CASE("augment examples and round trip") {
    const auto a1 = augment(Preference({0.6, 0.4}), 0.5);
    CHECK(a1.task_part()[0] == doctest::Approx(0.3));
    CHECK(a1.task_part()[1] == doctest::Approx(0.2));
    CHECK(a1.bc_weight() == doctest::Approx(0.5));

    const auto a2 = augment(Preference({1, 0}), 1.0);
    CHECK(a2.task_part() == std::vector<double>{0.0, 0.0});
    CHECK(a2.bc_weight() == 1.0);

    const auto a3 = augment(Preference({0.2, 0.8}), 0.25);
    CHECK(a3.task_part()[0] == doctest::Approx(0.15));
    CHECK(a3.task_part()[1] == doctest::Approx(0.6));

    CHECK_THROWS_AS(augment(Preference({0.5, 0.5}), 0.1), std::invalid_argument);
    CHECK_THROWS_AS(augment(Preference({0.5, 0.5}), 1.5), std::invalid_argument);

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> wbc_dist(0.2, 0.999);
    for (int trial = 0; trial < 100; ++trial) {
        const double t = unit(rng);
        Preference w({t, 1.0 - t});
        const auto aug = augment(w, wbc_dist(rng));
        const auto back = aug.task_preference();
        CHECK(back[0] == doctest::Approx(w[0]).epsilon(1e-9));
        CHECK(back[1] == doctest::Approx(w[1]).epsilon(1e-9));
        // flat vector sums to one
        double sum = aug.bc_weight();
        for (double x : aug.task_part()) sum += x;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("dominates examples") {
    CHECK(dominates({2, 2}, {1, 1}));
    CHECK_FALSE(dominates({2, 1}, {1, 2}));
    CHECK_FALSE(dominates({1, 1}, {1, 1}));
    CHECK_THROWS_AS(dominates({1, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("dominates is a strict partial order") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> coord(0, 4);
    auto rand_vec = [&] { return VectorReturn{double(coord(rng)), double(coord(rng)), double(coord(rng))}; };
    for (int trial = 0; trial < 2000; ++trial) {
        const auto a = rand_vec(), b = rand_vec(), c = rand_vec();
        CHECK_FALSE(dominates(a, a)); // irreflexive
        if (dominates(a, b)) CHECK_FALSE(dominates(b, a)); // antisymmetric
        if (dominates(a, b) && dominates(b, c)) CHECK(dominates(a, c)); // transitive
    }
}

TEST_CASE("trajectory invariants") {
    Trajectory t;
    t.transitions.push_back({{0}, {0}, {1, 2}, {1}, false});
    t.transitions.push_back({{1}, {0}, {2, 1}, {2}, true});
    t.episode_return = {3, 3};
    CHECK_NOTHROW(t.validate());

    t.episode_return = {3, 4};
    CHECK_THROWS_AS(t.validate(), IntegrityError);

    t.episode_return = {3, 3};
    t.transitions[0].terminal = true; // terminal before the final transition
    CHECK_THROWS_AS(t.validate(), IntegrityError);
}
