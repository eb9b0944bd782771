#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "honet/subnet.hpp"
#include "test_helpers.hpp"

using namespace honet;
using honet::testing::max_grad_rel_error;
using honet::testing::tensors_equal;

TEST_CASE("stubs") {
    StageFunction id = StageFunction::stub_identity();
    Tensor x({2}, {1, 2});
    CHECK(tensors_equal(id.forward(x, Mode::eval), x));
    CHECK(id.param_count() == 0);

    StageFunction zero = StageFunction::stub_scale(0.0);
    CHECK(tensors_equal(zero.forward(x, Mode::eval), Tensor({2}, 0.0)));

    StageFunction neg = StageFunction::stub_scale(-2.0);
    Tensor y({1}, {3.0});
    CHECK(neg.forward(y, Mode::eval).data()[0] == doctest::Approx(-6.0));
    CHECK(neg.param_count() == 0);
}

TEST_CASE("dense2 parameter count is d*w + w + w*d + d") {
    Rng rng(1);
    for (auto [d, w] : {std::pair<std::size_t, std::size_t>{4, 8},
                        {16, 16},
                        {3, 5},
                        {64, 64}}) {
        StageFunction f = StageFunction::dense2(d, w, Activation::relu, rng);
        CHECK(f.param_count() == d * w + w + w * d + d);
    }
}

TEST_CASE("shape preservation across kinds and widths") {
    Rng rng(2);
    for (std::size_t d : {2, 5, 16}) {
        StageFunction f = StageFunction::dense2(d, d + 3, Activation::relu, rng);
        Tensor x = Tensor::randn({4, d}, rng);
        CHECK(f.forward(x, Mode::train).shape() == x.shape());
        CHECK(f.forward(x, Mode::eval).shape() == x.shape());
    }
    for (std::size_t c : {1, 3}) {
        StageFunction f = StageFunction::conv2(c, Activation::relu, rng);
        Tensor x = Tensor::randn({2, c, 5, 4}, rng);
        CHECK(f.forward(x, Mode::train).shape() == x.shape());
    }
    StageFunction f = StageFunction::dense2(4, 4, Activation::relu, rng);
    Tensor bad = Tensor::randn({4, 5}, rng);
    CHECK_THROWS_AS(f.forward(bad, Mode::eval), dim_error);
}

TEST_CASE("zero-initialized final layer maps everything to zero") {
    Rng rng(3);
    StageFunction f = StageFunction::dense2(6, 6, Activation::relu, rng);
    auto& params = f.params();
    for (std::size_t i = 0; i < params[2].numel(); ++i) params[2].data()[i] = 0.0;
    for (std::size_t i = 0; i < params[3].numel(); ++i) params[3].data()[i] = 0.0;
    Tensor x = Tensor::randn({5, 6}, rng);
    CHECK(tensors_equal(f.forward(x, Mode::eval), Tensor({5, 6}, 0.0)));
}

TEST_CASE("dense2 gradients match finite differences") {
    Rng rng(4);
    StageFunction f = StageFunction::dense2(16, 16, Activation::tanh, rng);
    Tensor x = Tensor::randn({6, 16}, rng);
    Tensor w = Tensor::randn({6, 16}, rng);
    auto fn = [&] { return sum(mul(f.forward(x, Mode::train), w)); };
    {
        Tape tape;
        Tensor loss = fn();
        tape.backward(loss);
    }
    const double rel = max_grad_rel_error([&] { return fn().item(); }, f.params());
    CHECK(rel < 1e-4);
}

TEST_CASE("norm layer running statistics") {
    Rng rng(5);
    NormLayer norm(3);
    // fresh statistics make eval a near-identity
    Tensor x = Tensor::randn({8, 3}, rng, 2.0);
    Tensor ev = norm.forward_feature(x, Mode::eval);
    for (std::size_t i = 0; i < x.numel(); ++i)
        CHECK(ev.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-4));

    // train mode normalizes the batch and moves the running stats
    Tensor tr = norm.forward_feature(x, Mode::train);
    double m0 = 0.0;
    for (std::size_t i = 0; i < 8; ++i) m0 += tr.data()[i * 3];
    CHECK(m0 / 8.0 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(norm.running_mean[0] != 0.0);
    CHECK(norm.running_var[0] != 1.0);

    CHECK_THROWS_AS(norm.forward_feature(Tensor({1, 3}, 0.0), Mode::train), contract_error);
}

TEST_CASE("activation parsing") {
    CHECK(activation_from_string("relu") == Activation::relu);
    CHECK(activation_from_string("tanh") == Activation::tanh);
    CHECK_THROWS_AS(activation_from_string("gelu"), config_error);
}
