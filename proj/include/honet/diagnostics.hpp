#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "honet/train.hpp"

namespace honet {

/// Runs independent jobs on up to `workers` threads (1 = inline). Each job
/// owns its tapes and networks; aggregation is by pre-assigned slot, so the
/// result is schedule-independent.
void run_jobs(std::vector<std::function<void()>>& jobs, std::size_t workers);

// ---- untrained loss-range probe ----
struct InitProbeResult {
    std::string scheme;
    std::size_t depth = 0;
    std::vector<double> per_seed_loss;        // mean probe loss per seed (+inf on divergence)
    std::vector<double> per_seed_log_spread;  // ln(max/min) over probe samples, per seed
    double min_loss = 0.0;                    // over seeds
    double max_loss = 0.0;
    double spread = 0.0;  // max - min over seeds
    double median_log_spread = 0.0;
};

InitProbeResult init_probe(const NetworkShape& shape, const std::vector<std::uint64_t>& seeds,
                           const Batch& probe);
std::string init_probe_to_json(const std::vector<InitProbeResult>& rows);

// ---- learning-rate robustness sweep ----
struct LRSweepResult {
    std::string scheme;
    std::size_t depth = 0;
    std::vector<double> grid;
    std::vector<char> converged;  // 0/1 per grid cell (char: slots are written concurrently)
    double max_stable_lr = 0.0;   // 0 when every cell diverged
};

LRSweepResult lr_sweep(const NetworkShape& shape, const std::vector<double>& lr_grid,
                       std::size_t short_epochs, const Dataset& train_data,
                       const Dataset& test_data, const TrainConfig& base, std::uint64_t root_seed,
                       std::size_t workers = 1);
std::string lr_sweep_to_json(const std::vector<LRSweepResult>& rows);

// ---- degradation vs depth ----
struct DegradationPoint {
    std::size_t depth = 0;
    double final_test_acc = 0.0;
    double best_test_acc = 0.0;
    bool diverged = false;
};

std::vector<DegradationPoint> degradation_sweep(const SchemeSpec& scheme,
                                                const std::vector<std::size_t>& depths,
                                                std::size_t width, const Dataset& train_data,
                                                const Dataset& test_data, const TrainConfig& budget,
                                                std::uint64_t root_seed, std::size_t workers = 1);
std::string degradation_to_json(const std::string& scheme,
                                const std::vector<DegradationPoint>& pts);

/// Smallest depth in the curve whose accuracy drops below its predecessor by
/// more than `tol`; returns 0 when the curve never drops.
std::size_t first_drop_depth(const std::vector<DegradationPoint>& pts, double tol = 0.0);

// ---- time to threshold ----
struct TimeToThreshold {
    std::string scheme;
    double target_acc = 0.95;
    std::size_t epochs_to_target = 0;  // max_epochs + 1 when unreached
    bool reached = false;
};

TimeToThreshold time_to_threshold(const NetworkShape& shape, double target_acc,
                                  std::size_t max_epochs, const Dataset& train_data,
                                  const Dataset& test_data, const TrainConfig& base,
                                  std::uint64_t seed);
std::string time_to_threshold_to_json(const std::vector<TimeToThreshold>& rows);

// ---- cost accounting ----
struct CostAccount {
    std::string scheme;
    int retained_shortcuts = 0;     // static count per the retention convention
    int extra_muls_per_block = 0;   // scalar-blend multiplies beyond the Euler baseline
    int extra_adds_per_block = 0;
    std::size_t peak_live_tensors = 0;  // liveness-derived simultaneous feature maps
    std::size_t peak_live_bytes = 0;    // at the given width/batch
    double seconds_per_epoch = 0.0;     // measured median over timing epochs
};

CostAccount cost_account(const NetworkShape& shape, const Dataset& train_data,
                         const TrainConfig& base, std::size_t timing_epochs, std::uint64_t seed,
                         std::size_t batch_size_for_bytes = 128);
std::string cost_account_to_json(const std::vector<CostAccount>& rows);

/// Blend arithmetic per block: scalar multiplies (coef != 1) and vector adds.
std::pair<int, int> blend_ops_per_block(const Tableau& t, bool lite);
/// Peak simultaneously-live feature maps (input + stage outputs still needed).
std::size_t peak_live_maps(const Tableau& t, bool lite);

}  // namespace honet
