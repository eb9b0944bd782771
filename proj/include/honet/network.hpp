#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "honet/block.hpp"

namespace honet {

/// Everything needed to pick a block family: coefficient table plus the
/// lite / adaptive-h variations.
struct SchemeSpec {
    Scheme scheme = Scheme::euler;
    bool lite = false;
    bool adaptive_h = false;
    std::optional<std::pair<double, double>> h_clamp;  // off by default

    std::string label() const;
};

/// Accepts euler, midpoint, rk4, rk4-lite, verner, verner-adaptive,
/// verner-canonical.
SchemeSpec scheme_spec_from_string(const std::string& s);
std::vector<std::string> scheme_spec_names();

struct NetworkShape {
    std::size_t depth = 10;  // total layers incl. embedding and head
    SchemeSpec scheme;
    std::size_t width = 16;
    std::size_t input_dim = 2;  // dense: feature count; conv: channels
    std::size_t classes = 2;
    Activation act = Activation::relu;
    bool conv = false;

    std::size_t layers_per_block() const;
    /// Throws config_error naming nearby valid depths when incompatible.
    std::size_t block_count() const;
};

struct Param {
    std::string name;
    Tensor tensor;
    bool decay = false;  // weight matrices and h; biases excluded
    bool is_h = false;
    std::optional<std::pair<double, double>> clamp;
};

class HONetwork {
  public:
    enum class EmbKind { affine, conv, identity };
    enum class HeadKind { affine, gap_affine, zero };

    static HONetwork build(const NetworkShape& shape, std::uint64_t seed);
    /// Test/probe network: identity embedding, one stub per stage, zero head.
    static HONetwork build_stub(const NetworkShape& shape, const StageFunction& stub);

    Tensor forward(const Tensor& batch, Mode mode);

    /// (trainable parameter count including h, count of learnable h scalars)
    std::pair<std::size_t, std::size_t> param_count() const;

    /// Registry in declared order; handles share storage with the network.
    std::vector<Param> params();
    std::vector<NormLayer*> norm_layers();

    const NetworkShape& shape() const { return shape_; }
    std::uint64_t seed() const { return seed_; }
    std::vector<Block>& blocks() { return blocks_; }

  private:
    NetworkShape shape_;
    std::uint64_t seed_ = 0;
    EmbKind emb_kind_ = EmbKind::affine;
    HeadKind head_kind_ = HeadKind::affine;
    Tensor emb_w_, emb_b_, head_w_, head_b_;
    std::vector<Block> blocks_;
};

// ---- checkpointing ----
struct Checkpoint {
    NetworkShape shape;
    std::uint64_t seed = 0;
    std::uint64_t next_epoch = 0;
    std::vector<double> param_values;  // registry order
    std::vector<double> norm_stats;    // running mean/var pairs in layer order
    std::vector<double> velocities;    // optimizer momentum state, may be empty
};

/// Versioned binary container with content checksum; writes a JSON sidecar
/// (path + ".json") with the shape and any caller-supplied config for audit.
void write_checkpoint(const std::string& path, HONetwork& net, std::uint64_t next_epoch,
                      const std::vector<double>& velocities, const std::string& config_json = "");
Checkpoint read_checkpoint(const std::string& path);
/// Rebuilds the network from the stored shape/seed and restores all buffers.
HONetwork restore_network(const Checkpoint& c);

std::string shape_to_json(const NetworkShape& s);
NetworkShape shape_from_json(const std::string& json_text);

}  // namespace honet
