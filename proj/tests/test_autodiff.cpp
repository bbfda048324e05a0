#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "morl/errors.hpp"
#include "morl/nn.hpp"
#include "morl/tensor.hpp"

using namespace morl;
using ad::Mat;
using ad::Tensor;

namespace {

Mat random_mat(std::size_t r, std::size_t c, nn::Rng& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Mat m(r, c);
    for (double& x : m.d) x = dist(rng);
    return m;
}

// keep relu inputs away from the kink (test protocol: nudge 1e-3 off zero)
Mat kink_safe_mat(std::size_t r, std::size_t c, nn::Rng& rng) {
    Mat m = random_mat(r, c, rng);
    for (double& x : m.d) {
        if (std::abs(x) < 1e-3) x += x >= 0 ? 2e-3 : -2e-3;
    }
    return m;
}

} // namespace

TEST_CASE("forward: identity-initialized linear layer returns its input") {
    nn::Rng rng(0);
    nn::Mlp net({{3, 3, 3}, nn::Activation::kRelu, nn::OutputActivation::kNone}, rng, "id");
    // set both layers to identity, biases to zero
    for (std::size_t layer = 0; layer < 2; ++layer) {
        auto& W = net.parameters_mut()[2 * layer].value_mut();
        auto& b = net.parameters_mut()[2 * layer + 1].value_mut();
        std::fill(W.d.begin(), W.d.end(), 0.0);
        for (std::size_t i = 0; i < 3; ++i) W.at(i, i) = 1.0;
        std::fill(b.d.begin(), b.d.end(), 0.0);
    }
    Mat x(1, 3);
    x.d = {0.4, 1.5, -2.0}; // positive path through relu needs care: -2 clipped
    const Mat out = net.forward_raw(x);
    CHECK(out.d[0] == doctest::Approx(0.4));
    CHECK(out.d[1] == doctest::Approx(1.5));
    CHECK(out.d[2] == doctest::Approx(0.0)); // relu in the hidden layer clips the negative lane
}

TEST_CASE("forward: zero-initialized final layer gives zero output") {
    nn::Rng rng(1);
    nn::Mlp net({{4, 8, 2}, nn::Activation::kTanh, nn::OutputActivation::kNone}, rng, "z");
    auto& W = net.parameters_mut()[2].value_mut();
    auto& b = net.parameters_mut()[3].value_mut();
    std::fill(W.d.begin(), W.d.end(), 0.0);
    std::fill(b.d.begin(), b.d.end(), 0.0);
    const Mat out = net.forward_raw(random_mat(5, 4, rng));
    for (double v : out.d) CHECK(v == 0.0);
}

TEST_CASE("forward: fixed two-layer net matches hand computation") {
    nn::Rng rng(2);
    nn::Mlp net({{2, 2, 1}, nn::Activation::kTanh, nn::OutputActivation::kNone}, rng, "h");
    auto& W0 = net.parameters_mut()[0].value_mut();
    auto& b0 = net.parameters_mut()[1].value_mut();
    auto& W1 = net.parameters_mut()[2].value_mut();
    auto& b1 = net.parameters_mut()[3].value_mut();
    W0.d = {0.5, -0.25, 1.0, 0.75}; // rows: input dim, cols: output dim
    b0.d = {0.1, -0.2};
    W1.d = {2.0, -1.0};
    b1.d = {0.3};
    Mat x(1, 2);
    x.d = {1.0, 1.0};
    // hand evaluation of the two affine maps with tanh between
    const double h0 = std::tanh(1.0 * 0.5 + 1.0 * 1.0 + 0.1);
    const double h1 = std::tanh(1.0 * -0.25 + 1.0 * 0.75 - 0.2);
    const double expect = 2.0 * h0 - 1.0 * h1 + 0.3;
    CHECK(net.forward_raw(x).d[0] == doctest::Approx(expect).epsilon(1e-12));

    // graph path agrees with the raw path
    const Tensor y = net.forward(Tensor::constant(x));
    CHECK(y.value().d[0] == doctest::Approx(expect).epsilon(1e-12));

    CHECK_THROWS_AS(net.forward_raw(random_mat(1, 3, rng)), std::invalid_argument);
}

TEST_CASE("backward: d(w.x)/dw = x") {
    Mat w0(1, 3);
    w0.d = {0.5, -1.0, 2.0};
    Tensor w = Tensor::parameter(w0, "w");
    Mat x(1, 3);
    x.d = {3.0, 4.0, 5.0};
    Tensor loss = ad::sum_all(ad::mul(w, Tensor::constant(x)));
    ad::backward(loss);
    CHECK(w.grad().d == std::vector<double>{3.0, 4.0, 5.0});
}

TEST_CASE("backward: disconnected parameter keeps a zero gradient") {
    Tensor used = Tensor::parameter(Mat(1, 1, 2.0), "used");
    Tensor unused = Tensor::parameter(Mat(1, 1, 5.0), "unused");
    Tensor loss = ad::mean_all(ad::mul(used, used));
    ad::backward(loss);
    CHECK(used.grad().d[0] == doctest::Approx(4.0));
    CHECK(unused.grad().d[0] == 0.0);
}

TEST_CASE("backward: non-scalar loss is rejected") {
    Tensor p = Tensor::parameter(Mat(2, 2, 1.0), "p");
    CHECK_THROWS_AS(ad::backward(ad::mul(p, p)), std::invalid_argument);
}

TEST_CASE("regression loss gradients match finite differences over random nets") {
    nn::Rng rng(7);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto act = static_cast<nn::Activation>(trial % 3);
        nn::Mlp net({{3, 6, 2}, act, nn::OutputActivation::kNone}, rng,
                    "net" + std::to_string(trial));
        const Mat x = kink_safe_mat(4, 3, rng);
        const Mat y = random_mat(4, 2, rng);
        auto loss_builder = [&] {
            Tensor pred = net.forward(Tensor::constant(x));
            Tensor diff = ad::sub(pred, Tensor::constant(y));
            return ad::sum_all(ad::mul(diff, diff));
        };
        worst = std::max(worst, nn::finite_diff_check(loss_builder, net.parameters(), 1e-5));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("finite_diff_check on a quadratic is near machine precision") {
    Tensor p = Tensor::parameter(Mat(1, 4, 0.7), "q");
    auto loss_builder = [&] { return ad::sum_all(ad::mul(p, p)); };
    CHECK(nn::finite_diff_check(loss_builder, {p}, 1e-5) < 1e-7);
}

TEST_CASE("elementwise op gradients (exp, tanh, mish, clamp, slices, concat)") {
    nn::Rng rng(13);
    Tensor p = Tensor::parameter(kink_safe_mat(3, 4, rng), "p");
    auto loss_builder = [&] {
        Tensor e = ad::exp_(ad::scale(p, 0.3));
        Tensor t = ad::tanh_(p);
        Tensor m = ad::mish(p);
        Tensor c = ad::clamp(p, -0.75, 0.75);
        Tensor cat = ad::concat_cols({e, t, m, c});
        Tensor left = ad::slice_cols(cat, 0, 8);
        Tensor right = ad::slice_cols(cat, 8, 16);
        return ad::mean_all(ad::add(ad::mul(left, left), ad::mul(right, right)));
    };
    // keep clamp inputs off its kinks
    for (double& x : p.node()->value.d) {
        if (std::abs(std::abs(x) - 0.75) < 1e-3) x += 5e-3;
    }
    CHECK(nn::finite_diff_check(loss_builder, {p}, 1e-5) < 1e-4);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Tensor p = Tensor::parameter(Mat(2, 2, 1.5), "p");
    nn::Adam opt({p}, {});
    p.zero_grad();
    opt.step();
    for (double v : p.value().d) CHECK(v == 1.5);
}

TEST_CASE("adam: constant gradient moves parameters against its sign") {
    Tensor p = Tensor::parameter(Mat(1, 2, 0.0), "p");
    nn::Adam opt({p}, {.learning_rate = 1e-2});
    for (int i = 0; i < 50; ++i) {
        p.node()->grad.d = {1.0, -2.0};
        opt.step();
    }
    CHECK(p.value().d[0] < 0.0);
    CHECK(p.value().d[1] > 0.0);
}

TEST_CASE("adam: first step matches the hand-computed update") {
    const double lr = 3e-4, eps = 1e-8;
    Tensor p = Tensor::parameter(Mat(1, 1, 0.5), "p");
    nn::Adam opt({p}, {lr, 0.9, 0.999, eps});
    p.node()->grad.d = {0.25};
    opt.step();
    // bias-corrected first step: m_hat = g, v_hat = g^2
    const double expect = 0.5 - lr * 0.25 / (std::sqrt(0.25 * 0.25) + eps);
    CHECK(p.value().d[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("adam rejects non-finite gradients naming the parameter") {
    Tensor p = Tensor::parameter(Mat(1, 1, 0.0), "layer3.W");
    nn::Adam opt({p}, {});
    p.node()->grad.d = {std::nan("")};
    try {
        opt.step();
        FAIL("expected NonFiniteGradientError");
    } catch (const NonFiniteGradientError& e) {
        CHECK(e.parameter() == "layer3.W");
    }
}

TEST_CASE("polyak update examples") {
    Tensor t = Tensor::parameter(Mat(1, 2, 0.0), "t");
    Tensor o = Tensor::parameter(Mat(1, 2, 1.0), "o");
    std::vector<Tensor> tp{t}, op{o};

    nn::polyak_update(tp, op, 0.005);
    CHECK(t.value().d[0] == doctest::Approx(0.005));

    t.value_mut().d = {0.0, 0.0};
    nn::polyak_update(tp, op, 0.5);
    nn::polyak_update(tp, op, 0.5);
    CHECK(t.value().d[0] == doctest::Approx(0.75));

    t.value_mut().d = {0.25, -3.0};
    nn::polyak_update(tp, op, 1.0); // hard copy
    CHECK(t.value().d == std::vector<double>{1.0, 1.0});

    CHECK_THROWS_AS(nn::polyak_update(tp, op, 0.0), std::invalid_argument);
}

TEST_CASE("checkpoint round trip preserves parameters bit-exactly") {
    nn::Rng rng(99);
    nn::Mlp net({{3, 5, 2}, nn::Activation::kMish, nn::OutputActivation::kTanh}, rng, "ck");
    const std::string path = "test_ckpt.bin";
    nn::CheckpointHeader h{"unit-test", "{}", "deadbeef", 99};
    nn::save_checkpoint(path, h, net.parameters());

    nn::Rng rng2(1234);
    nn::Mlp other({{3, 5, 2}, nn::Activation::kMish, nn::OutputActivation::kTanh}, rng2, "ck");
    auto params = other.parameters();
    const auto loaded = nn::load_checkpoint(path, params);
    CHECK(loaded.kind == "unit-test");
    CHECK(loaded.config_hash == "deadbeef");
    CHECK(loaded.seed == 99);
    for (std::size_t i = 0; i < params.size(); ++i) {
        CHECK(params[i].value().d == net.parameters()[i].value().d);
    }

    // architecture mismatch is an integrity error
    nn::Rng rng3(5);
    nn::Mlp wrong({{3, 6, 2}, nn::Activation::kMish, nn::OutputActivation::kTanh}, rng3, "ck");
    auto wrong_params = wrong.parameters();
    CHECK_THROWS_AS(nn::load_checkpoint(path, wrong_params), IntegrityError);
    std::remove(path.c_str());
}

TEST_CASE("deterministic initialization given a seed") {
    nn::Rng a(42), b(42);
    nn::Mlp na({{3, 8, 2}, nn::Activation::kRelu, nn::OutputActivation::kNone}, a, "d");
    nn::Mlp nb({{3, 8, 2}, nn::Activation::kRelu, nn::OutputActivation::kNone}, b, "d");
    for (std::size_t i = 0; i < na.parameters().size(); ++i) {
        CHECK(na.parameters()[i].value().d == nb.parameters()[i].value().d);
    }
}
