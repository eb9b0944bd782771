#include "honet/data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace honet {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

Dataset finish_2d(std::vector<double> xy, std::vector<int> labels, std::size_t classes,
                  const std::string& split, std::string provenance) {
    Dataset d;
    const std::size_t n = labels.size();
    d.features = Tensor({n, 2}, std::move(xy));
    d.labels = std::move(labels);
    d.classes = classes;
    d.split = split;
    d.provenance = std::move(provenance);
    return d;
}

}  // namespace

Dataset gen_spirals(std::size_t n_per_class, std::size_t classes, double noise, std::uint64_t seed,
                    const std::string& split) {
    if (n_per_class < 1 || classes < 2) throw contract_error("gen_spirals: need n>=1, classes>=2");
    Rng rng(split_seed(seed, "spirals", classes));
    std::vector<double> xy;
    std::vector<int> labels;
    xy.reserve(2 * n_per_class * classes);
    const double span = 3.0 * kPi;
    for (std::size_t c = 0; c < classes; ++c) {
        const double rot = 2.0 * kPi * static_cast<double>(c) / static_cast<double>(classes);
        for (std::size_t i = 0; i < n_per_class; ++i) {
            // angle in (0, span]; radius proportional to angle
            const double t = span * static_cast<double>(i + 1) / static_cast<double>(n_per_class);
            const double r = t / span;
            const double a = t + rot;
            xy.push_back(r * std::cos(a) + noise * rng.gauss());
            xy.push_back(r * std::sin(a) + noise * rng.gauss());
            labels.push_back(static_cast<int>(c));
        }
    }
    return finish_2d(std::move(xy), std::move(labels), classes, split,
                     "spirals(n=" + std::to_string(n_per_class) + ",classes=" +
                         std::to_string(classes) + ",noise=" + std::to_string(noise) +
                         ",seed=" + std::to_string(seed) + ")");
}

Dataset gen_rings(std::size_t n_per_class, std::size_t classes, double noise, std::uint64_t seed,
                  const std::string& split) {
    if (n_per_class < 1 || classes < 2) throw contract_error("gen_rings: need n>=1, classes>=2");
    Rng rng(split_seed(seed, "rings", classes));
    std::vector<double> xy;
    std::vector<int> labels;
    for (std::size_t c = 0; c < classes; ++c) {
        const double r = static_cast<double>(c + 1) / static_cast<double>(classes);
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n_per_class);
            xy.push_back(r * std::cos(a) + noise * rng.gauss());
            xy.push_back(r * std::sin(a) + noise * rng.gauss());
            labels.push_back(static_cast<int>(c));
        }
    }
    return finish_2d(std::move(xy), std::move(labels), classes, split,
                     "rings(seed=" + std::to_string(seed) + ")");
}

Dataset gen_blobs(std::size_t n_per_class, std::size_t classes, double noise, std::uint64_t seed,
                  const std::string& split) {
    if (n_per_class < 1 || classes < 2) throw contract_error("gen_blobs: need n>=1, classes>=2");
    Rng rng(split_seed(seed, "blobs", classes));
    std::vector<double> xy;
    std::vector<int> labels;
    for (std::size_t c = 0; c < classes; ++c) {
        const double a = 2.0 * kPi * static_cast<double>(c) / static_cast<double>(classes);
        for (std::size_t i = 0; i < n_per_class; ++i) {
            xy.push_back(std::cos(a) + noise * rng.gauss());
            xy.push_back(std::sin(a) + noise * rng.gauss());
            labels.push_back(static_cast<int>(c));
        }
    }
    return finish_2d(std::move(xy), std::move(labels), classes, split,
                     "blobs(seed=" + std::to_string(seed) + ")");
}

// ---------------------------------------------------------------- cifar-10

ChannelStats cifar10_default_stats() {
    return {{0.4914, 0.4822, 0.4465}, {0.2470, 0.2435, 0.2616}};
}

double denormalize_pixel(double v, double mean, double stddev) {
    return v * stddev + mean;
}

Dataset read_cifar10_bin(const std::string& path, const ChannelStats& stats,
                         const std::string& split) {
    constexpr std::size_t kRecord = 3073;
    constexpr std::size_t kPlane = 1024;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cifar10: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % kRecord != 0)
        throw format_error("cifar10: '" + path + "' has " + std::to_string(bytes.size()) +
                           " bytes, not a multiple of 3073");
    const std::size_t n = bytes.size() / kRecord;
    Dataset d;
    d.classes = 10;
    d.split = split;
    d.provenance = "cifar10(" + path + ",digest=" +
                   std::to_string(fnv1a64(bytes.data(), bytes.size())) + ")";
    std::vector<double> feats(n * 3 * 32 * 32);
    d.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto* rec = reinterpret_cast<const unsigned char*>(bytes.data()) + r * kRecord;
        if (rec[0] > 9)
            throw format_error("cifar10: record " + std::to_string(r) + " has label byte " +
                               std::to_string(rec[0]));
        d.labels[r] = rec[0];
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t p = 0; p < kPlane; ++p) {
                const double v = static_cast<double>(rec[1 + c * kPlane + p]) / 255.0;
                feats[(r * 3 + c) * kPlane + p] = (v - stats.mean[c]) / stats.std[c];
            }
    }
    d.features = Tensor({n, 3, 32, 32}, std::move(feats));
    return d;
}

// ---------------------------------------------------------------- idx

namespace {
std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw format_error("idx: truncated '" + path + "'");
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}
}  // namespace

Dataset read_idx_images(const std::string& path, const std::string& split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("idx: cannot open '" + path + "'");
    if (read_be32(in, path) != 0x00000803u)
        throw format_error("idx: '" + path + "' is not an image file (magic != 0x00000803)");
    const std::uint32_t n = read_be32(in, path);
    const std::uint32_t rows = read_be32(in, path);
    const std::uint32_t cols = read_be32(in, path);
    std::vector<unsigned char> raw(static_cast<std::size_t>(n) * rows * cols);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw format_error("idx: '" + path + "' truncated pixel data");
    std::vector<double> feats(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) feats[i] = static_cast<double>(raw[i]) / 255.0;
    Dataset d;
    d.features = Tensor({n, 1, rows, cols}, std::move(feats));
    d.labels.assign(n, 0);  // caller pairs with read_idx_labels
    d.classes = 10;
    d.split = split;
    d.provenance = "idx(" + path + ")";
    return d;
}

std::vector<int> read_idx_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("idx: cannot open '" + path + "'");
    if (read_be32(in, path) != 0x00000801u)
        throw format_error("idx: '" + path + "' is not a label file (magic != 0x00000801)");
    const std::uint32_t n = read_be32(in, path);
    std::vector<unsigned char> raw(n);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw format_error("idx: '" + path + "' truncated label data");
    return std::vector<int>(raw.begin(), raw.end());
}

// ---------------------------------------------------------------- batching

namespace {
Batch take(const Dataset& d, const std::vector<std::size_t>& idx, std::size_t from, std::size_t to) {
    const Shape& fs = d.features.shape();
    std::size_t stride = 1;
    for (std::size_t k = 1; k < fs.size(); ++k) stride *= fs[k];
    Shape bs = fs;
    bs[0] = to - from;
    std::vector<double> vals((to - from) * stride);
    std::vector<int> labels(to - from);
    for (std::size_t i = from; i < to; ++i) {
        std::memcpy(vals.data() + (i - from) * stride, d.features.data() + idx[i] * stride,
                    stride * sizeof(double));
        labels[i - from] = d.labels[idx[i]];
    }
    return {Tensor(bs, std::move(vals)), std::move(labels)};
}
}  // namespace

std::vector<Batch> batches(const Dataset& d, std::size_t batch_size, std::uint64_t epoch_seed) {
    if (batch_size < 1) throw contract_error("batches: batch_size must be >= 1");
    std::vector<std::size_t> idx(d.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(epoch_seed);
    rng.shuffle(idx);
    std::vector<Batch> out;
    for (std::size_t from = 0; from < idx.size(); from += batch_size)
        out.push_back(take(d, idx, from, std::min(idx.size(), from + batch_size)));
    return out;
}

Batch probe_batch(const Dataset& d, std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> idx(d.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(split_seed(seed, "probe-batch", count));
    rng.shuffle(idx);
    idx.resize(std::min(count, idx.size()));
    std::vector<std::size_t> sorted(idx.begin(), idx.end());
    return take(d, sorted, 0, sorted.size());
}

}  // namespace honet
