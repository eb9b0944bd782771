#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "honet/block.hpp"
#include "honet/ode.hpp"
#include "test_helpers.hpp"

using namespace honet;
using honet::testing::tensors_equal;

namespace {
Tensor one() {
    return Tensor({1}, {1.0});
}
}  // namespace

TEST_CASE("tableau consistency and explicitness") {
    CHECK(make_tableau(Scheme::euler).output_weight_sum() == 1.0);
    CHECK(make_tableau(Scheme::midpoint).output_weight_sum() == 1.0);
    CHECK(make_tableau(Scheme::rk4).output_weight_sum() == doctest::Approx(1.0).epsilon(1e-15));
    // the printed output weights add to 0.9924, within 1e-2 of one
    const double printed_sum = make_tableau(Scheme::verner).output_weight_sum();
    CHECK(printed_sum == doctest::Approx(0.9924).epsilon(1e-12));
    CHECK(std::fabs(printed_sum - 1.0) < 1e-2);
    CHECK(make_tableau(Scheme::verner_canonical).output_weight_sum() ==
          doctest::Approx(1.0).epsilon(1e-15));

    for (auto s : {Scheme::euler, Scheme::midpoint, Scheme::rk4, Scheme::verner,
                   Scheme::verner_canonical}) {
        const Tableau t = make_tableau(s);
        CHECK(t.strictly_explicit());
        CHECK(t.stage_rules.size() == t.stages);
    }
    CHECK(make_tableau(Scheme::verner).stages == 14);
    CHECK(make_tableau(Scheme::verner).layers_per_block() == 28);
}

TEST_CASE("euler block") {
    Block id = make_stub_block(Scheme::euler, StageFunction::stub_identity());
    Tensor x({3}, {1, -2, 0.5});
    CHECK(tensors_equal(euler_block(id, x), scalar_mul(x, 2.0)));  // F(x) + x = 2x

    Block zero = make_stub_block(Scheme::euler, StageFunction::stub_scale(0.0));
    CHECK(tensors_equal(euler_block(zero, x), x));

    Block lam = make_stub_block(Scheme::euler, StageFunction::stub_scale(1.0));
    CHECK(euler_block(lam, one()).item() == doctest::Approx(2.0));

    Block mid = make_stub_block(Scheme::midpoint, StageFunction::stub_identity());
    CHECK_THROWS_AS(euler_block(mid, x), contract_error);
}

TEST_CASE("midpoint block") {
    Block id = make_stub_block(Scheme::midpoint, StageFunction::stub_identity());
    CHECK(midpoint_block(id, one()).item() == doctest::Approx(2.5));

    Block zero = make_stub_block(Scheme::midpoint, StageFunction::stub_scale(0.0));
    Tensor x({2}, {3, -1});
    CHECK(tensors_equal(midpoint_block(zero, x), x));
}

TEST_CASE("rk4 block, full and lite") {
    Block id = make_stub_block(Scheme::rk4, StageFunction::stub_identity());
    // k1=1, k2=1.5, k3=1.75, k4=2.75; full: 1 + 10.25/6
    CHECK(rk4_block(id, one(), false).item() == doctest::Approx(1.0 + 10.25 / 6.0).epsilon(1e-15));
    CHECK(rk4_block(id, one(), true).item() == doctest::Approx(3.75).epsilon(1e-15));

    Block zero = make_stub_block(Scheme::rk4, StageFunction::stub_scale(0.0));
    Tensor x({2}, {0.25, 9});
    CHECK(tensors_equal(rk4_block(zero, x, false), x));
    CHECK(tensors_equal(rk4_block(zero, x, true), x));
}

TEST_CASE("verner block") {
    Block zero = make_stub_block(Scheme::verner, StageFunction::stub_scale(0.0));
    Tensor x({2}, {1.5, -4});
    CHECK(tensors_equal(verner_block(zero, x), x));

    // identity stubs at h=1 equal one oracle step of y'=y; the multiplier of
    // the printed table is 3.33628 (the rounded coefficients land far from e)
    Block id = make_stub_block(Scheme::verner, StageFunction::stub_identity());
    const Tableau t = make_tableau(Scheme::verner);
    const OdeRhs f = [](double, const OdeState& y) { return OdeState{y[0]}; };
    const double oracle = ode_step(t, f, 0.0, {1.0}, 1.0)[0];
    const double block = verner_block(id, one()).item();
    CHECK(std::fabs(block - oracle) < 1e-12);
    CHECK(block == doctest::Approx(3.3362751).epsilon(1e-6));

    // h = 0 collapses the block to the identity map
    Block h0 = make_stub_block(Scheme::verner, StageFunction::stub_identity(),
                               StepScale::fixed(0.0));
    CHECK(tensors_equal(verner_block(h0, x), x));
    Block h0a = make_stub_block(Scheme::verner, StageFunction::stub_scale(0.7),
                                StepScale::adaptive(0.0));
    CHECK(tensors_equal(verner_block(h0a, x), x));
}

TEST_CASE("verner divergence names the stage") {
    Block big = make_stub_block(Scheme::verner, StageFunction::stub_scale(1e160));
    try {
        verner_block(big, one());
        FAIL("expected divergence_error");
    } catch (const divergence_error& e) {
        CHECK(e.stage_index >= 0);
        CHECK(std::string(e.what()).find("k") != std::string::npos);
    }
}

TEST_CASE("stacked euler chain") {
    auto mk = [] { return make_stub_block(Scheme::euler, StageFunction::stub_identity()); };
    std::vector<Block> two = {mk(), mk()};
    ChainTrace t2 = stacked_euler_chain(two, one());
    CHECK(t2.out.item() == doctest::Approx(4.0));
    REQUIRE(t2.ks.size() == 2);
    CHECK(t2.ks[0].item() == doctest::Approx(1.0));  // F(x)
    CHECK(t2.ks[1].item() == doctest::Approx(2.0));  // F(2x)

    std::vector<Block> four = {mk(), mk(), mk(), mk()};
    CHECK(stacked_euler_chain(four, one()).out.item() == doctest::Approx(16.0));

    std::vector<Block> none;
    CHECK(stacked_euler_chain(none, one()).out.item() == doctest::Approx(1.0));
}

TEST_CASE("zero-F collapse for every scheme") {
    Rng rng(11);
    Tensor x = Tensor::randn({4, 3}, rng);
    for (auto s : {Scheme::euler, Scheme::midpoint, Scheme::rk4, Scheme::verner,
                   Scheme::verner_canonical}) {
        Block b = make_stub_block(s, StageFunction::stub_scale(0.0));
        CHECK(tensors_equal(b.forward(x, Mode::eval), x));
    }
}

TEST_CASE("block equals one oracle step on y' = lambda y") {
    for (auto s : {Scheme::euler, Scheme::midpoint, Scheme::rk4, Scheme::verner,
                   Scheme::verner_canonical}) {
        const Tableau t = make_tableau(s);
        for (double lambda : {-2.0, 0.5, 1.0}) {
            for (double h : {0.5, 1.0}) {
                Block b = make_stub_block(s, StageFunction::stub_scale(lambda),
                                          StepScale::fixed(h));
                const OdeRhs f = [lambda](double, const OdeState& y) {
                    return OdeState{lambda * y[0]};
                };
                const double oracle = ode_step(t, f, 0.0, {1.0}, h)[0];
                const double block = b.forward(one(), Mode::eval).item();
                INFO(to_string(s) << " lambda " << lambda << " h " << h);
                CHECK(std::fabs(block - oracle) <= 1e-12);
            }
        }
    }
}

TEST_CASE("oracle equivalence also holds through the learnable-h path") {
    for (double h : {0.5, 1.0}) {
        Block b = make_stub_block(Scheme::verner, StageFunction::stub_scale(-2.0),
                                  StepScale::adaptive(h));
        const Tableau t = make_tableau(Scheme::verner);
        const OdeRhs f = [](double, const OdeState& y) { return OdeState{-2.0 * y[0]}; };
        CHECK(std::fabs(b.forward(one(), Mode::eval).item() - ode_step(t, f, 0.0, {1.0}, h)[0]) <=
              1e-12);
    }
}

TEST_CASE("zero-F blocks propagate the identity Jacobian") {
    Rng rng(13);
    for (auto s : {Scheme::euler, Scheme::midpoint, Scheme::rk4, Scheme::verner}) {
        Block b = make_stub_block(s, StageFunction::stub_scale(0.0));
        Tensor x = Tensor::randn({2, 3}, rng);
        x.set_requires_grad(true);
        Tensor probe = Tensor::randn({2, 3}, rng);
        {
            Tape tape;
            Tensor out = b.forward(x, Mode::eval);
            Tensor loss = sum(mul(out, probe));
            tape.backward(loss);
        }
        // vector-Jacobian probe: J = I means x.grad == probe exactly
        for (std::size_t i = 0; i < x.numel(); ++i) CHECK(x.grad()[i] == probe.data()[i]);
        x.zero_grad();
    }
}

TEST_CASE("gradient flows through learnable h") {
    Block b = make_stub_block(Scheme::midpoint, StageFunction::stub_identity(),
                              StepScale::adaptive(1.0));
    Tensor x({1}, {1.0});
    {
        Tape tape;
        Tensor out = b.forward(x, Mode::eval);
        tape.backward(sum(out));
    }
    // out = 1 + h(1 + h/2): d/dh = 1 + h = 2 at h=1
    CHECK(b.step.h.grad()[0] == doctest::Approx(2.0));
}

TEST_CASE("retained shortcut accounting") {
    CHECK(retained_shortcuts(make_tableau(Scheme::euler), false) == 1);
    CHECK(retained_shortcuts(make_tableau(Scheme::midpoint), false) == 1);
    CHECK(retained_shortcuts(make_tableau(Scheme::rk4), false) == 4);
    CHECK(retained_shortcuts(make_tableau(Scheme::rk4), true) == 2);
    CHECK(retained_shortcuts(make_tableau(Scheme::verner), false) == 15);
}

TEST_CASE("tableau json dump round-trips the key facts") {
    const std::string text = make_tableau(Scheme::midpoint).to_json_string();
    CHECK(text.find("\"name\": \"midpoint\"") != std::string::npos);
    CHECK(text.find("\"stages\": 2") != std::string::npos);
    CHECK(text.find("k1") != std::string::npos);
}
