#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "honet/data.hpp"
#include "honet/network.hpp"

namespace honet {

struct TrainConfig {
    double lr0 = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::optional<double> h_weight_decay;  // defaults to weight_decay
    std::size_t batch_size = 128;
    std::vector<std::size_t> milestones = {100, 150, 200, 230};
    double lr_factor = 0.1;
    std::size_t epochs = 260;
    std::uint64_t seed = 0;
    double divergence_threshold = 10.0;  // multiple of the initial loss
    std::size_t checkpoint_every = 0;    // 0 = only final
    std::string checkpoint_path;         // empty = no checkpoints

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_loss = 0.0;
    double test_acc = 0.0;
    double seconds = 0.0;
    bool diverged = false;
};

/// lr0 * factor^(number of milestones <= epoch).
double lr_at(const TrainConfig& c, std::size_t epoch);

// SGD with momentum and decoupled-from-nothing classic weight decay:
// v <- mu v + (g + wd p); p <- p - lr v. Gradients are cleared afterwards.
class Sgd {
  public:
    Sgd(std::vector<Param> params, double momentum, double weight_decay,
        std::optional<double> h_weight_decay = std::nullopt);

    void step(double lr);
    void zero_grad();

    std::vector<double> velocity_flat() const;
    void set_velocity_flat(const std::vector<double>& flat);

  private:
    std::vector<Param> params_;
    std::vector<std::vector<double>> velocity_;
    double momentum_;
    double weight_decay_;
    double h_weight_decay_;
};

struct TrainResult {
    std::vector<EpochRecord> records;
    bool diverged = false;
    double initial_loss = 0.0;
};

/// Epoch loop with per-epoch reshuffling, divergence detection (loss above
/// threshold x initial or non-finite for a full epoch -> flagged, recorded,
/// training stops) and optional checkpointing. `start_epoch` / `velocities`
/// support bit-exact resume.
TrainResult train(HONetwork& net, const Dataset& train_data, const Dataset& test_data,
                  const TrainConfig& config, std::size_t start_epoch = 0,
                  const std::vector<double>* velocities = nullptr);

}  // namespace honet
