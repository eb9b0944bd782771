#pragma once
#include <optional>
#include <vector>

#include "honet/subnet.hpp"
#include "honet/tableau.hpp"

namespace honet {

/// Step scale h: fixed value or one learnable scalar shared by the block.
struct StepScale {
    double value = 1.0;
    bool learnable = false;
    std::optional<std::pair<double, double>> clamp;  // applied after optimizer steps
    Tensor h;  // defined iff learnable

    static StepScale fixed(double v = 1.0) {
        StepScale s;
        s.value = v;
        return s;
    }
    static StepScale adaptive(double init = 1.0,
                              std::optional<std::pair<double, double>> clamp = std::nullopt) {
        StepScale s;
        s.value = init;
        s.learnable = true;
        s.clamp = clamp;
        s.h = Tensor::scalar(init);
        s.h.set_requires_grad(true);
        return s;
    }
};

// One residual block: a coefficient table plus an independent stage function
// per stage. Stage i consumes x + h * sum(a_ij k_j); the block output is
// x + h * sum(b_i k_i) (or x + k_last for the lite RK4 variant).
struct Block {
    Tableau tableau;
    bool lite = false;
    std::vector<StageFunction> stage_functions;
    StepScale step;

    struct Trace {
        Tensor out;
        std::vector<Tensor> ks;
    };

    Tensor forward(const Tensor& x, Mode mode, int block_index = -1);
    Trace forward_trace(const Tensor& x, Mode mode, int block_index = -1);
};

Block make_stub_block(Scheme scheme, const StageFunction& stub, StepScale step = StepScale::fixed(),
                      bool lite = false);

// Spec'd per-scheme entry points; thin validators over the shared composer.
Tensor euler_block(Block& b, const Tensor& x, Mode mode = Mode::eval);
Tensor midpoint_block(Block& b, const Tensor& x, Mode mode = Mode::eval);
Tensor rk4_block(Block& b, const Tensor& x, bool lite, Mode mode = Mode::eval);
Tensor verner_block(Block& b, const Tensor& x, Mode mode = Mode::eval);

struct ChainTrace {
    Tensor out;
    std::vector<Tensor> ks;  // residual F outputs, one per chained block
};

/// Sequential application of Euler blocks; exposes each residual for
/// structural side-by-side comparison with the higher-order blocks.
ChainTrace stacked_euler_chain(std::vector<Block>& blocks, const Tensor& x, Mode mode = Mode::eval);

}  // namespace honet
