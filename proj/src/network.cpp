#include "honet/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace honet {

std::string SchemeSpec::label() const {
    std::string s = to_string(scheme);
    if (lite) s += "-lite";
    if (adaptive_h) s += "-adaptive";
    return s;
}

SchemeSpec scheme_spec_from_string(const std::string& s) {
    SchemeSpec spec;
    if (s == "rk4-lite") {
        spec.scheme = Scheme::rk4;
        spec.lite = true;
    } else if (s == "verner-adaptive") {
        spec.scheme = Scheme::verner;
        spec.adaptive_h = true;
    } else {
        spec.scheme = scheme_from_string(s);
    }
    return spec;
}

std::vector<std::string> scheme_spec_names() {
    return {"euler", "midpoint", "rk4", "rk4-lite", "verner", "verner-adaptive", "verner-canonical"};
}

std::size_t NetworkShape::layers_per_block() const {
    return make_tableau(scheme.scheme).layers_per_block();
}

std::size_t NetworkShape::block_count() const {
    const std::size_t lpb = layers_per_block();
    if (depth >= 2 + lpb && (depth - 2) % lpb == 0) return (depth - 2) / lpb;
    // nearest valid depths, for the error message
    const std::size_t below = depth > 2 ? (depth - 2) / lpb : 0;
    const std::size_t k = below >= 1 ? below : 1;
    const std::size_t lo = 2 + k * lpb;
    const std::size_t hi = 2 + (k + 1) * lpb;
    throw config_error("depth " + std::to_string(depth) + " incompatible with scheme '" +
                       scheme.label() + "' (" + std::to_string(lpb) +
                       " layers per block); nearest valid depths: " + std::to_string(lo) + ", " +
                       std::to_string(hi));
}

namespace {

StepScale make_step(const SchemeSpec& spec) {
    if (spec.adaptive_h) return StepScale::adaptive(1.0, spec.h_clamp);
    return StepScale::fixed(1.0);
}

}  // namespace

HONetwork HONetwork::build(const NetworkShape& shape, std::uint64_t seed) {
    const std::size_t n_blocks = shape.block_count();  // validates depth
    HONetwork net;
    net.shape_ = shape;
    net.seed_ = seed;
    Rng rng(split_seed(seed, "network-init", 0));
    const Tableau tableau = make_tableau(shape.scheme.scheme);
    if (shape.conv) {
        net.emb_kind_ = EmbKind::conv;
        net.head_kind_ = HeadKind::gap_affine;
        const double s = std::sqrt(2.0 / (9.0 * static_cast<double>(shape.input_dim)));
        net.emb_w_ = Tensor::randn({shape.width, shape.input_dim, 3, 3}, rng, s).set_requires_grad(true);
        net.emb_b_ = Tensor(Shape{shape.width}, 0.0).set_requires_grad(true);
    } else {
        net.emb_kind_ = EmbKind::affine;
        net.head_kind_ = HeadKind::affine;
        const double s = std::sqrt(2.0 / static_cast<double>(shape.input_dim));
        net.emb_w_ = Tensor::randn({shape.input_dim, shape.width}, rng, s).set_requires_grad(true);
        net.emb_b_ = Tensor(Shape{shape.width}, 0.0).set_requires_grad(true);
    }
    for (std::size_t b = 0; b < n_blocks; ++b) {
        Block block;
        block.tableau = tableau;
        block.lite = shape.scheme.lite;
        block.step = make_step(shape.scheme);
        for (std::size_t s = 0; s < tableau.stages; ++s)
            block.stage_functions.push_back(
                shape.conv ? StageFunction::conv2(shape.width, shape.act, rng)
                           : StageFunction::dense2(shape.width, shape.width, shape.act, rng));
        net.blocks_.push_back(std::move(block));
    }
    const double sh = std::sqrt(2.0 / static_cast<double>(shape.width));
    net.head_w_ = Tensor::randn({shape.width, shape.classes}, rng, sh).set_requires_grad(true);
    net.head_b_ = Tensor(Shape{shape.classes}, 0.0).set_requires_grad(true);
    return net;
}

HONetwork HONetwork::build_stub(const NetworkShape& shape, const StageFunction& stub) {
    const std::size_t n_blocks = shape.block_count();
    if (shape.input_dim != shape.width)
        throw config_error("stub network needs input_dim == width for the identity embedding");
    HONetwork net;
    net.shape_ = shape;
    net.emb_kind_ = EmbKind::identity;
    net.head_kind_ = HeadKind::zero;
    const Tableau tableau = make_tableau(shape.scheme.scheme);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        Block block;
        block.tableau = tableau;
        block.lite = shape.scheme.lite;
        block.step = make_step(shape.scheme);
        block.stage_functions.assign(tableau.stages, stub);
        net.blocks_.push_back(std::move(block));
    }
    return net;
}

Tensor HONetwork::forward(const Tensor& batch, Mode mode) {
    Tensor h;
    switch (emb_kind_) {
        case EmbKind::affine:
            if (batch.rank() != 2 || batch.shape()[1] != shape_.input_dim)
                throw dim_error("forward: want (n," + std::to_string(shape_.input_dim) + "), got " +
                                shape_str(batch.shape()));
            h = add_rowvec(matmul(batch, emb_w_), emb_b_);
            break;
        case EmbKind::conv:
            h = conv2d_3x3(batch, emb_w_, emb_b_);
            break;
        case EmbKind::identity:
            if (batch.rank() != 2 || batch.shape()[1] != shape_.width)
                throw dim_error("forward: identity embedding wants (n," +
                                std::to_string(shape_.width) + "), got " + shape_str(batch.shape()));
            h = batch;
            break;
    }
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        h = blocks_[b].forward(h, mode, static_cast<int>(b));
        if (!h.all_finite())
            throw divergence_error("non-finite activations leaving block " + std::to_string(b),
                                   static_cast<int>(b));
    }
    switch (head_kind_) {
        case HeadKind::affine:
            return add_rowvec(matmul(h, head_w_), head_b_);
        case HeadKind::gap_affine:
            return add_rowvec(matmul(global_avg_pool(h), head_w_), head_b_);
        case HeadKind::zero:
            return Tensor({h.shape()[0], shape_.classes}, 0.0);
    }
    throw contract_error("forward: unreachable head kind");
}

std::pair<std::size_t, std::size_t> HONetwork::param_count() const {
    std::size_t trainable = 0, extra_h = 0;
    if (emb_kind_ != EmbKind::identity && emb_w_.defined())
        trainable += emb_w_.numel() + emb_b_.numel();
    for (const auto& block : blocks_) {
        for (const auto& f : block.stage_functions) trainable += f.param_count();
        if (block.step.learnable) {
            trainable += 1;
            extra_h += 1;
        }
    }
    if (head_kind_ != HeadKind::zero && head_w_.defined())
        trainable += head_w_.numel() + head_b_.numel();
    return {trainable, extra_h};
}

std::vector<Param> HONetwork::params() {
    std::vector<Param> ps;
    auto push = [&ps](const std::string& name, const Tensor& t, bool decay, bool is_h,
                      std::optional<std::pair<double, double>> clamp = std::nullopt) {
        ps.push_back({name, t, decay, is_h, clamp});
    };
    if (emb_kind_ != EmbKind::identity && emb_w_.defined()) {
        push("emb.w", emb_w_, true, false);
        push("emb.b", emb_b_, false, false);
    }
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const std::string prefix = "block" + std::to_string(b);
        for (std::size_t s = 0; s < blocks_[b].stage_functions.size(); ++s) {
            auto& f = blocks_[b].stage_functions[s];
            static const char* names[4] = {"w1", "b1", "w2", "b2"};
            for (std::size_t p = 0; p < f.params().size(); ++p)
                push(prefix + ".f" + std::to_string(s) + "." + names[p % 4], f.params()[p],
                     p % 2 == 0, false);
        }
        if (blocks_[b].step.learnable)
            push(prefix + ".h", blocks_[b].step.h, true, true, blocks_[b].step.clamp);
    }
    if (head_kind_ != HeadKind::zero && head_w_.defined()) {
        push("head.w", head_w_, true, false);
        push("head.b", head_b_, false, false);
    }
    return ps;
}

std::vector<NormLayer*> HONetwork::norm_layers() {
    std::vector<NormLayer*> ns;
    for (auto& block : blocks_)
        for (auto& f : block.stage_functions)
            for (auto& n : f.norms()) ns.push_back(&n);
    return ns;
}

// ---------------------------------------------------------------- shape json

std::string shape_to_json(const NetworkShape& s) {
    nlohmann::json j;
    j["depth"] = s.depth;
    j["scheme"] = s.scheme.label();
    j["width"] = s.width;
    j["input_dim"] = s.input_dim;
    j["classes"] = s.classes;
    j["activation"] = to_string(s.act);
    j["conv"] = s.conv;
    if (s.scheme.h_clamp)
        j["h_clamp"] = {s.scheme.h_clamp->first, s.scheme.h_clamp->second};
    return j.dump();
}

NetworkShape shape_from_json(const std::string& json_text) {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    NetworkShape s;
    s.depth = j.at("depth").get<std::size_t>();
    s.scheme = scheme_spec_from_string(j.at("scheme").get<std::string>());
    s.width = j.at("width").get<std::size_t>();
    s.input_dim = j.at("input_dim").get<std::size_t>();
    s.classes = j.at("classes").get<std::size_t>();
    s.act = activation_from_string(j.at("activation").get<std::string>());
    s.conv = j.at("conv").get<bool>();
    if (j.contains("h_clamp"))
        s.scheme.h_clamp = {j["h_clamp"][0].get<double>(), j["h_clamp"][1].get<double>()};
    return s;
}

// ---------------------------------------------------------------- checkpoint

namespace {

constexpr std::uint32_t kCkptMagic = 0x484f4e43;  // "HONC"
constexpr std::uint32_t kCkptVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) { buf.append(reinterpret_cast<char*>(&v), 4); }
void put_u64(std::string& buf, std::uint64_t v) { buf.append(reinterpret_cast<char*>(&v), 8); }
void put_doubles(std::string& buf, const std::vector<double>& v) {
    put_u64(buf, v.size());
    buf.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}
void put_str(std::string& buf, const std::string& s) {
    put_u64(buf, s.size());
    buf.append(s);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw format_error("checkpoint: truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v;
        std::memcpy(&v, buf.data() + pos, 8);
        pos += 8;
        return v;
    }
    std::vector<double> doubles() {
        const std::uint64_t n = u64();
        need(n * sizeof(double));
        std::vector<double> v(n);
        std::memcpy(v.data(), buf.data() + pos, n * sizeof(double));
        pos += n * sizeof(double);
        return v;
    }
    std::string str() {
        const std::uint64_t n = u64();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

std::vector<double> gather_norm_stats(HONetwork& net) {
    std::vector<double> stats;
    for (NormLayer* n : net.norm_layers()) {
        stats.insert(stats.end(), n->running_mean.begin(), n->running_mean.end());
        stats.insert(stats.end(), n->running_var.begin(), n->running_var.end());
    }
    return stats;
}

}  // namespace

void write_checkpoint(const std::string& path, HONetwork& net, std::uint64_t next_epoch,
                      const std::vector<double>& velocities, const std::string& config_json) {
    std::string payload;
    put_str(payload, shape_to_json(net.shape()));
    put_u64(payload, net.seed());
    put_u64(payload, next_epoch);
    std::vector<double> flat;
    for (auto& p : net.params())
        flat.insert(flat.end(), p.tensor.data(), p.tensor.data() + p.tensor.numel());
    put_doubles(payload, flat);
    put_doubles(payload, gather_norm_stats(net));
    put_doubles(payload, velocities);

    std::string file;
    put_u32(file, kCkptMagic);
    put_u32(file, kCkptVersion);
    put_u64(file, fnv1a64(payload.data(), payload.size()));
    file += payload;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw format_error("checkpoint: cannot open '" + path + "' for writing");
    out.write(file.data(), static_cast<std::streamsize>(file.size()));
    out.close();

    nlohmann::json side;
    side["shape"] = nlohmann::json::parse(shape_to_json(net.shape()));
    side["seed"] = net.seed();
    side["next_epoch"] = next_epoch;
    side["parameters"] = flat.size();
    if (!config_json.empty()) side["config"] = nlohmann::json::parse(config_json);
    std::ofstream sc(path + ".json", std::ios::trunc);
    sc << side.dump(2) << "\n";
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("checkpoint: cannot open '" + path + "'");
    std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r{file};
    if (r.u32() != kCkptMagic) throw format_error("checkpoint: bad magic");
    if (r.u32() != kCkptVersion) throw format_error("checkpoint: unsupported version");
    const std::uint64_t want = r.u64();
    const std::string payload = file.substr(r.pos);
    if (fnv1a64(payload.data(), payload.size()) != want)
        throw format_error("checkpoint: checksum mismatch");
    Checkpoint c;
    c.shape = shape_from_json(r.str());
    c.seed = r.u64();
    c.next_epoch = r.u64();
    c.param_values = r.doubles();
    c.norm_stats = r.doubles();
    c.velocities = r.doubles();
    return c;
}

HONetwork restore_network(const Checkpoint& c) {
    HONetwork net = HONetwork::build(c.shape, c.seed);
    std::size_t off = 0;
    for (auto& p : net.params()) {
        if (off + p.tensor.numel() > c.param_values.size())
            throw format_error("checkpoint: parameter buffer too short");
        std::copy(c.param_values.begin() + static_cast<long>(off),
                  c.param_values.begin() + static_cast<long>(off + p.tensor.numel()),
                  p.tensor.data());
        off += p.tensor.numel();
    }
    if (off != c.param_values.size()) throw format_error("checkpoint: parameter buffer too long");
    std::size_t soff = 0;
    for (NormLayer* n : net.norm_layers()) {
        const std::size_t d = n->running_mean.size();
        if (soff + 2 * d > c.norm_stats.size())
            throw format_error("checkpoint: norm statistics buffer too short");
        std::copy(c.norm_stats.begin() + static_cast<long>(soff),
                  c.norm_stats.begin() + static_cast<long>(soff + d), n->running_mean.begin());
        std::copy(c.norm_stats.begin() + static_cast<long>(soff + d),
                  c.norm_stats.begin() + static_cast<long>(soff + 2 * d), n->running_var.begin());
        soff += 2 * d;
    }
    return net;
}

}  // namespace honet
