#pragma once
#include <stdexcept>
#include <string>

namespace honet {

/// Shape mismatch between operands.
struct dim_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Violated operation precondition (non-scalar loss, missing gradient, ...).
struct contract_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration (incompatible depth, unknown scheme, ...).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed on-disk data (dataset files, checkpoints).
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite value surfaced during evaluation; names where it happened.
struct divergence_error : std::runtime_error {
    divergence_error(const std::string& what, int block, int stage = -1)
        : std::runtime_error(what), block_index(block), stage_index(stage) {}
    int block_index;
    int stage_index;
};

}  // namespace honet
