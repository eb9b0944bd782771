#include "honet/block.hpp"

namespace honet {

namespace {

// x + h * sum(c_i t_i), routing through the learnable h tensor when present.
Tensor scaled_blend(const Tensor& x, const StepScale& step,
                    const std::vector<std::pair<double, Tensor>>& terms) {
    if (terms.empty()) return x;
    if (step.learnable) return add(x, mul_scalar_tensor(linear_combination(terms), step.h));
    if (step.value == 1.0) return scale_add(x, terms);
    std::vector<std::pair<double, Tensor>> scaled;
    scaled.reserve(terms.size());
    for (const auto& [c, t] : terms) scaled.emplace_back(c * step.value, t);
    return scale_add(x, scaled);
}

void check_stage_finite(const Tensor& k, std::size_t stage, int block_index) {
    if (k.all_finite()) return;
    throw divergence_error("non-finite value at stage k" + std::to_string(stage + 1) +
                               (block_index >= 0 ? " of block " + std::to_string(block_index) : ""),
                           block_index, static_cast<int>(stage));
}

}  // namespace

Block::Trace Block::forward_trace(const Tensor& x, Mode mode, int block_index) {
    if (stage_functions.size() != tableau.stages)
        throw contract_error("block '" + tableau.name + "': " +
                             std::to_string(stage_functions.size()) + " stage functions for " +
                             std::to_string(tableau.stages) + " stages");
    std::vector<Tensor> ks;
    ks.reserve(tableau.stages);
    for (std::size_t i = 0; i < tableau.stages; ++i) {
        std::vector<std::pair<double, Tensor>> terms;
        terms.reserve(tableau.stage_rules[i].size());
        for (const auto& t : tableau.stage_rules[i])
            terms.emplace_back(t.coef, ks[static_cast<std::size_t>(t.source)]);
        Tensor k = stage_functions[i].forward(scaled_blend(x, step, terms), mode);
        check_stage_finite(k, i, block_index);
        ks.push_back(std::move(k));
    }
    const std::vector<StageTerm> out_rule = lite ? lite_output_rule(tableau) : tableau.output_rule;
    std::vector<std::pair<double, Tensor>> out_terms;
    out_terms.reserve(out_rule.size());
    for (const auto& t : out_rule) out_terms.emplace_back(t.coef, ks[static_cast<std::size_t>(t.source)]);
    Tensor out = scaled_blend(x, step, out_terms);
    return {std::move(out), std::move(ks)};
}

Tensor Block::forward(const Tensor& x, Mode mode, int block_index) {
    return forward_trace(x, mode, block_index).out;
}

Block make_stub_block(Scheme scheme, const StageFunction& stub, StepScale step, bool lite) {
    Block b;
    b.tableau = make_tableau(scheme);
    b.lite = lite;
    b.step = std::move(step);
    b.stage_functions.assign(b.tableau.stages, stub);
    return b;
}

namespace {
void expect_scheme(const Block& b, Scheme s, const char* op) {
    if (b.tableau.name != make_tableau(s).name)
        throw contract_error(std::string(op) + ": block built for '" + b.tableau.name + "'");
}
}  // namespace

Tensor euler_block(Block& b, const Tensor& x, Mode mode) {
    expect_scheme(b, Scheme::euler, "euler_block");
    return b.forward(x, mode);
}

Tensor midpoint_block(Block& b, const Tensor& x, Mode mode) {
    expect_scheme(b, Scheme::midpoint, "midpoint_block");
    return b.forward(x, mode);
}

Tensor rk4_block(Block& b, const Tensor& x, bool lite, Mode mode) {
    expect_scheme(b, Scheme::rk4, "rk4_block");
    b.lite = lite;
    return b.forward(x, mode);
}

Tensor verner_block(Block& b, const Tensor& x, Mode mode) {
    if (b.tableau.name != "verner" && b.tableau.name != "verner-canonical")
        throw contract_error("verner_block: block built for '" + b.tableau.name + "'");
    return b.forward(x, mode);
}

ChainTrace stacked_euler_chain(std::vector<Block>& blocks, const Tensor& x, Mode mode) {
    ChainTrace trace;
    Tensor state = x;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        expect_scheme(blocks[i], Scheme::euler, "stacked_euler_chain");
        Block::Trace t = blocks[i].forward_trace(state, mode, static_cast<int>(i));
        trace.ks.push_back(t.ks.front());
        state = t.out;
    }
    trace.out = state;
    return trace;
}

}  // namespace honet
