#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "honet/errors.hpp"

namespace honet {

enum class Scheme { euler, midpoint, rk4, verner, verner_canonical };

Scheme scheme_from_string(const std::string& s);
std::string to_string(Scheme s);
std::vector<std::string> scheme_names();

enum class HPolicy { none, fixed_one, learnable };

/// One term of a stage or output rule: coefficient times k[source].
struct StageTerm {
    int source;   // 0-based index of the referenced stage value
    double coef;
};

// Explicit Runge-Kutta coefficient table. Stage i may reference only k_j with
// j < i; every stage input and the output also carry the block input with
// weight 1. Exact-form coefficients (rationals, sqrt expressions) are
// evaluated once, here, in 64-bit.
struct Tableau {
    std::string name;
    std::size_t stages = 0;
    std::vector<std::vector<StageTerm>> stage_rules;  // size == stages
    std::vector<StageTerm> output_rule;
    HPolicy default_h_policy = HPolicy::none;

    std::vector<double> abscissae() const;  // row sums (stage consistency values)
    double output_weight_sum() const;
    bool strictly_explicit() const;
    /// True when every stage references only its immediate predecessor.
    bool chain_only() const;
    std::size_t layers_per_block() const { return 2 * stages; }
    std::uint64_t digest() const;
    std::string to_json_string() const;
};

Tableau make_tableau(Scheme s);

/// Output rule for the memory-lite RK4 variant: x + k_last, no blend.
std::vector<StageTerm> lite_output_rule(const Tableau& t);

/// Static per-block retained-feature-map count (input map included);
/// `lite` selects the no-blend RK4 output.
int retained_shortcuts(const Tableau& t, bool lite);

}  // namespace honet
