#include "honet/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "json.hpp"

namespace honet {

void run_jobs(std::vector<std::function<void()>>& jobs, std::size_t workers) {
    if (workers <= 1) {
        for (auto& j : jobs) j();
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            jobs[i]();
        }
    };
    std::vector<std::thread> pool;
    const std::size_t n = std::min(workers, jobs.size());
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// ---------------------------------------------------------------- init probe

InitProbeResult init_probe(const NetworkShape& shape, const std::vector<std::uint64_t>& seeds,
                           const Batch& probe) {
    if (seeds.empty()) throw contract_error("init_probe: need at least 1 seed");
    InitProbeResult r;
    r.scheme = shape.scheme.label();
    r.depth = shape.depth;
    for (std::uint64_t seed : seeds) {
        HONetwork net = HONetwork::build(shape, seed);
        double mean_loss = kInf;
        double log_spread = kInf;
        try {
            Tensor logits = net.forward(probe.features, Mode::eval);
            const auto losses = per_sample_cross_entropy(logits, probe.labels);
            double lo = kInf, hi = -kInf, sum = 0.0;
            bool finite = true;
            for (double l : losses) {
                if (!std::isfinite(l)) {
                    finite = false;
                    break;
                }
                lo = std::min(lo, l);
                hi = std::max(hi, l);
                sum += l;
            }
            if (finite) {
                mean_loss = sum / static_cast<double>(losses.size());
                log_spread = std::log(std::max(hi, 1e-12)) - std::log(std::max(lo, 1e-12));
            }
        } catch (const divergence_error&) {
            // recorded as +inf
        }
        r.per_seed_loss.push_back(mean_loss);
        r.per_seed_log_spread.push_back(log_spread);
    }
    r.min_loss = *std::min_element(r.per_seed_loss.begin(), r.per_seed_loss.end());
    r.max_loss = *std::max_element(r.per_seed_loss.begin(), r.per_seed_loss.end());
    r.spread = r.max_loss - r.min_loss;
    r.median_log_spread = median(r.per_seed_log_spread);
    return r;
}

std::string init_probe_to_json(const std::vector<InitProbeResult>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"scheme", r.scheme},
                       {"depth", r.depth},
                       {"seeds", r.per_seed_loss.size()},
                       {"min_loss", r.min_loss},
                       {"max_loss", r.max_loss},
                       {"spread", r.spread},
                       {"median_log_spread", r.median_log_spread}});
    return nlohmann::json{{"init_probe", arr}}.dump();
}

// ---------------------------------------------------------------- lr sweep

LRSweepResult lr_sweep(const NetworkShape& shape, const std::vector<double>& lr_grid,
                       std::size_t short_epochs, const Dataset& train_data,
                       const Dataset& test_data, const TrainConfig& base, std::uint64_t root_seed,
                       std::size_t workers) {
    if (lr_grid.size() < 3) throw contract_error("lr_sweep: need a grid of at least 3 points");
    for (std::size_t i = 1; i < lr_grid.size(); ++i)
        if (lr_grid[i] <= lr_grid[i - 1]) throw contract_error("lr_sweep: grid must be increasing");
    LRSweepResult r;
    r.scheme = shape.scheme.label();
    r.depth = shape.depth;
    r.grid = lr_grid;
    r.converged.assign(lr_grid.size(), 0);
    std::vector<std::function<void()>> jobs;
    for (std::size_t li = 0; li < lr_grid.size(); ++li) {
        jobs.push_back([&, li] {
            TrainConfig cfg = base;
            cfg.lr0 = lr_grid[li];
            cfg.milestones.clear();
            cfg.epochs = short_epochs;
            cfg.seed = split_seed(root_seed, "lr-sweep-train", li);
            HONetwork net = HONetwork::build(shape, split_seed(root_seed, "lr-sweep-net", 0));
            const TrainResult res = train(net, train_data, test_data, cfg);
            r.converged[li] = res.diverged ? 0 : 1;
        });
    }
    run_jobs(jobs, workers);
    for (std::size_t li = 0; li < lr_grid.size(); ++li)
        if (r.converged[li]) r.max_stable_lr = std::max(r.max_stable_lr, lr_grid[li]);
    return r;
}

std::string lr_sweep_to_json(const std::vector<LRSweepResult>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json cells = nlohmann::json::array();
        for (std::size_t i = 0; i < r.grid.size(); ++i)
            cells.push_back({{"lr", r.grid[i]}, {"converged", static_cast<bool>(r.converged[i])}});
        arr.push_back({{"scheme", r.scheme},
                       {"depth", r.depth},
                       {"cells", cells},
                       {"max_stable_lr", r.max_stable_lr}});
    }
    return nlohmann::json{{"lr_sweep", arr}}.dump();
}

// ---------------------------------------------------------------- degradation

std::vector<DegradationPoint> degradation_sweep(const SchemeSpec& scheme,
                                                const std::vector<std::size_t>& depths,
                                                std::size_t width, const Dataset& train_data,
                                                const Dataset& test_data, const TrainConfig& budget,
                                                std::uint64_t root_seed, std::size_t workers) {
    std::vector<DegradationPoint> pts(depths.size());
    std::vector<std::function<void()>> jobs;
    for (std::size_t di = 0; di < depths.size(); ++di) {
        jobs.push_back([&, di] {
            NetworkShape shape;
            shape.depth = depths[di];
            shape.scheme = scheme;
            shape.width = width;
            shape.input_dim = train_data.features.shape()[1];
            shape.classes = train_data.classes;
            TrainConfig cfg = budget;
            cfg.seed = split_seed(root_seed, "degradation-train", di);
            HONetwork net = HONetwork::build(shape, split_seed(root_seed, "degradation-net", di));
            const TrainResult res = train(net, train_data, test_data, cfg);
            DegradationPoint p;
            p.depth = depths[di];
            p.diverged = res.diverged;
            for (const auto& rec : res.records) p.best_test_acc = std::max(p.best_test_acc, rec.test_acc);
            p.final_test_acc = res.records.empty() ? 0.0 : res.records.back().test_acc;
            pts[di] = p;
        });
    }
    run_jobs(jobs, workers);
    return pts;
}

std::string degradation_to_json(const std::string& scheme, const std::vector<DegradationPoint>& pts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : pts)
        arr.push_back({{"depth", p.depth},
                       {"final_test_acc", p.final_test_acc},
                       {"best_test_acc", p.best_test_acc},
                       {"diverged", p.diverged}});
    return nlohmann::json{{"scheme", scheme}, {"curve", arr}}.dump();
}

std::size_t first_drop_depth(const std::vector<DegradationPoint>& pts, double tol) {
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].final_test_acc < pts[i - 1].final_test_acc - tol) return pts[i].depth;
    return 0;
}

// ---------------------------------------------------------------- time to threshold

TimeToThreshold time_to_threshold(const NetworkShape& shape, double target_acc,
                                  std::size_t max_epochs, const Dataset& train_data,
                                  const Dataset& test_data, const TrainConfig& base,
                                  std::uint64_t seed) {
    TimeToThreshold t;
    t.scheme = shape.scheme.label();
    t.target_acc = target_acc;
    TrainConfig cfg = base;
    cfg.epochs = max_epochs;
    cfg.milestones.clear();
    cfg.seed = split_seed(seed, "ttt-train", 0);
    HONetwork net = HONetwork::build(shape, split_seed(seed, "ttt-net", 0));
    const TrainResult res = train(net, train_data, test_data, cfg);
    t.epochs_to_target = max_epochs + 1;
    for (const auto& rec : res.records)
        if (!rec.diverged && rec.train_acc >= target_acc) {
            t.epochs_to_target = rec.epoch + 1;
            t.reached = true;
            break;
        }
    return t;
}

std::string time_to_threshold_to_json(const std::vector<TimeToThreshold>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"scheme", r.scheme},
                       {"target_acc", r.target_acc},
                       {"epochs_to_target", r.epochs_to_target},
                       {"reached", r.reached}});
    return nlohmann::json{{"time_to_threshold", arr}}.dump();
}

// ---------------------------------------------------------------- cost accounting

std::pair<int, int> blend_ops_per_block(const Tableau& t, bool lite) {
    const std::vector<StageTerm> out_rule = lite ? lite_output_rule(t) : t.output_rule;
    int muls = 0, adds = 0;
    for (const auto& row : t.stage_rules)
        for (const auto& term : row) {
            if (term.coef != 1.0) ++muls;
            ++adds;
        }
    for (const auto& term : out_rule) {
        if (term.coef != 1.0) ++muls;
        ++adds;
    }
    return {muls, adds};
}

std::size_t peak_live_maps(const Tableau& t, bool lite) {
    const std::vector<StageTerm> out_rule = lite ? lite_output_rule(t) : t.output_rule;
    std::vector<std::size_t> last_use(t.stages, 0);
    for (std::size_t i = 0; i < t.stages; ++i)
        for (const auto& term : t.stage_rules[i])
            last_use[static_cast<std::size_t>(term.source)] = i;
    for (const auto& term : out_rule)
        last_use[static_cast<std::size_t>(term.source)] = t.stages;  // held until output
    std::size_t peak = 1;  // the block input is always live
    for (std::size_t i = 0; i < t.stages; ++i) {
        std::size_t live = 1;
        for (std::size_t j = 0; j < i; ++j)
            if (last_use[j] >= i) ++live;
        peak = std::max(peak, live);
    }
    return peak;
}

CostAccount cost_account(const NetworkShape& shape, const Dataset& train_data,
                         const TrainConfig& base, std::size_t timing_epochs, std::uint64_t seed,
                         std::size_t batch_size_for_bytes) {
    CostAccount acc;
    acc.scheme = shape.scheme.label();
    const Tableau tableau = make_tableau(shape.scheme.scheme);
    acc.retained_shortcuts = retained_shortcuts(tableau, shape.scheme.lite);
    const auto [muls, adds] = blend_ops_per_block(tableau, shape.scheme.lite);
    // Euler baseline per equivalent depth: one add per two layers, no muls.
    const int euler_adds = static_cast<int>(tableau.layers_per_block() / 2);
    acc.extra_muls_per_block = muls;
    acc.extra_adds_per_block = adds - euler_adds;
    acc.peak_live_tensors = peak_live_maps(tableau, shape.scheme.lite);
    acc.peak_live_bytes = acc.peak_live_tensors * batch_size_for_bytes * shape.width * sizeof(double);

    TrainConfig cfg = base;
    cfg.epochs = timing_epochs + 1;  // first epoch is warmup
    cfg.milestones.clear();
    cfg.seed = split_seed(seed, "cost-train", 0);
    HONetwork net = HONetwork::build(shape, split_seed(seed, "cost-net", 0));
    const TrainResult res = train(net, train_data, Dataset{}, cfg);
    std::vector<double> secs;
    for (std::size_t i = 1; i < res.records.size(); ++i) secs.push_back(res.records[i].seconds);
    acc.seconds_per_epoch = median(secs);
    return acc;
}

std::string cost_account_to_json(const std::vector<CostAccount>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"scheme", r.scheme},
                       {"retained_shortcuts", r.retained_shortcuts},
                       {"extra_muls_per_block", r.extra_muls_per_block},
                       {"extra_adds_per_block", r.extra_adds_per_block},
                       {"peak_live_tensors", r.peak_live_tensors},
                       {"peak_live_bytes", r.peak_live_bytes},
                       {"seconds_per_epoch", r.seconds_per_epoch}});
    return nlohmann::json{{"cost_account", arr}}.dump();
}

}  // namespace honet
