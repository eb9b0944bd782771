#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "honet/tensor.hpp"

namespace honet {

struct Dataset {
    Tensor features;          // (n,d) or (n,c,h,w)
    std::vector<int> labels;  // in [0, classes)
    std::size_t classes = 0;
    std::string split;        // "train" | "test"
    std::string provenance;   // generator+seed or file digest

    std::size_t size() const { return labels.size(); }
};

/// Interleaved Archimedean spirals in 2-D, angle span 3*pi, radius
/// proportional to angle, plus Gaussian noise of the given scale.
Dataset gen_spirals(std::size_t n_per_class, std::size_t classes, double noise, std::uint64_t seed,
                    const std::string& split = "train");

/// Concentric rings, one radius per class.
Dataset gen_rings(std::size_t n_per_class, std::size_t classes, double noise, std::uint64_t seed,
                  const std::string& split = "train");

/// Gaussian blobs on a circle of centers.
Dataset gen_blobs(std::size_t n_per_class, std::size_t classes, double noise, std::uint64_t seed,
                  const std::string& split = "train");

struct ChannelStats {
    std::vector<double> mean;  // per channel
    std::vector<double> std;
};

/// CIFAR-10 binary batches: 3073-byte records, label byte then 1024 R + 1024 G
/// + 1024 B. Pixels scaled to [0,1] then standardized per channel.
Dataset read_cifar10_bin(const std::string& path, const ChannelStats& stats,
                         const std::string& split = "train");

ChannelStats cifar10_default_stats();

/// Undo the [0,1]-scale + standardize transform (round-trips within 1e-6).
double denormalize_pixel(double v, double mean, double stddev);

/// IDX image file (magic 0x00000803) as (n,1,rows,cols) scaled to [0,1].
Dataset read_idx_images(const std::string& path, const std::string& split = "train");
/// IDX label file (magic 0x00000801).
std::vector<int> read_idx_labels(const std::string& path);

struct Batch {
    Tensor features;
    std::vector<int> labels;
};

/// One epoch's batches: a seeded permutation of all samples, final short
/// batch retained.
std::vector<Batch> batches(const Dataset& d, std::size_t batch_size, std::uint64_t epoch_seed);

/// Fixed probe subset (deterministic per seed), used by the init probes.
Batch probe_batch(const Dataset& d, std::size_t count, std::uint64_t seed);

}  // namespace honet
