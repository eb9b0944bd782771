#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "honet/train.hpp"

namespace honet {

// Exit codes: 0 success (a recorded divergence is data, not failure),
// 1 runtime/I/O failure, 2 usage error.
int cli_main(int argc, const char* const* argv);

/// Full run configuration; serializable so a persisted snapshot replays.
struct RunConfig {
    std::string command;
    std::vector<std::string> schemes = {"euler", "midpoint", "rk4"};
    std::string scheme = "euler";
    std::size_t depth = 10;
    std::size_t width = 16;
    std::string activation = "relu";
    std::string task = "spirals";
    std::string data_dir;
    std::size_t train_per_class = 256;
    std::size_t test_per_class = 128;
    std::size_t train_limit = 0;  // cifar subset caps, 0 = all
    std::size_t test_limit = 0;
    double noise = 0.2;
    std::size_t classes = 2;
    TrainConfig train;
    std::string grid = "0.05:0.45:0.05";
    std::vector<std::size_t> depths = {10, 18, 30, 58};
    std::size_t probe_seeds = 20;
    std::size_t probe_batch = 128;
    double target_acc = 0.95;
    std::size_t max_epochs = 150;
    bool h_clamp = false;  // [0.125, 4] constraint on learnable h
    std::string out_dir;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    std::string resume;
};

std::string run_config_to_json(const RunConfig& c);
void run_config_from_json(const std::string& text, RunConfig& c);

std::vector<double> parse_grid(const std::string& spec);

}  // namespace honet
