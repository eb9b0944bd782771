#include "honet/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "honet/diagnostics.hpp"
#include "honet/ode.hpp"
#include "honet/report.hpp"

namespace fs = std::filesystem;

namespace honet {

std::string run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["command"] = c.command;
    j["schemes"] = c.schemes;
    j["scheme"] = c.scheme;
    j["depth"] = c.depth;
    j["width"] = c.width;
    j["activation"] = c.activation;
    j["task"] = c.task;
    j["data_dir"] = c.data_dir;
    j["train_per_class"] = c.train_per_class;
    j["test_per_class"] = c.test_per_class;
    j["train_limit"] = c.train_limit;
    j["test_limit"] = c.test_limit;
    j["noise"] = c.noise;
    j["classes"] = c.classes;
    j["grid"] = c.grid;
    j["depths"] = c.depths;
    j["probe_seeds"] = c.probe_seeds;
    j["probe_batch"] = c.probe_batch;
    j["target_acc"] = c.target_acc;
    j["max_epochs"] = c.max_epochs;
    j["h_clamp"] = c.h_clamp;
    j["out_dir"] = c.out_dir;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["resume"] = c.resume;
    nlohmann::json t;
    t["lr0"] = c.train.lr0;
    t["momentum"] = c.train.momentum;
    t["weight_decay"] = c.train.weight_decay;
    if (c.train.h_weight_decay) t["h_weight_decay"] = *c.train.h_weight_decay;
    t["batch_size"] = c.train.batch_size;
    t["milestones"] = c.train.milestones;
    t["lr_factor"] = c.train.lr_factor;
    t["epochs"] = c.train.epochs;
    t["divergence_threshold"] = c.train.divergence_threshold;
    t["checkpoint_every"] = c.train.checkpoint_every;
    j["train"] = t;
    return j.dump(2);
}

void run_config_from_json(const std::string& text, RunConfig& c) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config file: ") + e.what());
    }
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j[key].template get<std::decay_t<decltype(field)>>();
    };
    get("schemes", c.schemes);
    get("scheme", c.scheme);
    get("depth", c.depth);
    get("width", c.width);
    get("activation", c.activation);
    get("task", c.task);
    get("data_dir", c.data_dir);
    get("train_per_class", c.train_per_class);
    get("test_per_class", c.test_per_class);
    get("train_limit", c.train_limit);
    get("test_limit", c.test_limit);
    get("noise", c.noise);
    get("classes", c.classes);
    get("grid", c.grid);
    get("depths", c.depths);
    get("probe_seeds", c.probe_seeds);
    get("probe_batch", c.probe_batch);
    get("target_acc", c.target_acc);
    get("max_epochs", c.max_epochs);
    get("h_clamp", c.h_clamp);
    get("out_dir", c.out_dir);
    get("seed", c.seed);
    get("jobs", c.jobs);
    get("resume", c.resume);
    if (j.contains("train")) {
        const auto& t = j["train"];
        auto gt = [&t](const char* key, auto& field) {
            if (t.contains(key)) field = t[key].template get<std::decay_t<decltype(field)>>();
        };
        gt("lr0", c.train.lr0);
        gt("momentum", c.train.momentum);
        gt("weight_decay", c.train.weight_decay);
        if (t.contains("h_weight_decay")) c.train.h_weight_decay = t["h_weight_decay"].get<double>();
        gt("batch_size", c.train.batch_size);
        gt("milestones", c.train.milestones);
        gt("lr_factor", c.train.lr_factor);
        gt("epochs", c.train.epochs);
        gt("divergence_threshold", c.train.divergence_threshold);
        gt("checkpoint_every", c.train.checkpoint_every);
    }
}

std::vector<double> parse_grid(const std::string& spec) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0 || hi < lo)
        throw config_error("grid must be lo:hi:step with step > 0, got '" + spec + "'");
    std::vector<double> g;
    for (double v = lo; v <= hi + 1e-12; v += step) g.push_back(v);
    if (g.empty()) throw config_error("grid '" + spec + "' is empty");
    return g;
}

namespace {

// ---------------------------------------------------------------- helpers

std::string default_out_dir(const RunConfig& c) {
    const char* root = std::getenv("HONET_OUT_ROOT");
    std::string base = root != nullptr && *root != '\0' ? root : "runs";
    std::string cmd = c.command;
    for (auto& ch : cmd)
        if (ch == ' ') ch = '-';
    return base + "/" + cmd + "-seed" + std::to_string(c.seed);
}

struct TaskData {
    Dataset train;
    Dataset test;
};

Dataset limit_dataset(const Dataset& d, std::size_t cap) {
    if (cap == 0 || d.size() <= cap) return d;
    Dataset out;
    const Shape& fs = d.features.shape();
    std::size_t stride = 1;
    for (std::size_t k = 1; k < fs.size(); ++k) stride *= fs[k];
    Shape bs = fs;
    bs[0] = cap;
    std::vector<double> vals(d.features.data(), d.features.data() + cap * stride);
    out.features = Tensor(bs, std::move(vals));
    out.labels.assign(d.labels.begin(), d.labels.begin() + static_cast<long>(cap));
    out.classes = d.classes;
    out.split = d.split;
    out.provenance = d.provenance + "[:" + std::to_string(cap) + "]";
    return out;
}

TaskData load_task(const RunConfig& c) {
    TaskData t;
    if (c.task == "spirals" || c.task == "rings" || c.task == "blobs") {
        auto gen = c.task == "spirals" ? gen_spirals : (c.task == "rings" ? gen_rings : gen_blobs);
        t.train = gen(c.train_per_class, c.classes, c.noise, split_seed(c.seed, "task-train", 0),
                      "train");
        t.test = gen(c.test_per_class, c.classes, c.noise, split_seed(c.seed, "task-test", 0), "test");
        return t;
    }
    if (c.task == "cifar10") {
        if (c.data_dir.empty()) throw config_error("task cifar10 needs --data-dir");
        const ChannelStats stats = cifar10_default_stats();
        Dataset train;
        bool first = true;
        for (int b = 1; b <= 5; ++b) {
            const std::string path = c.data_dir + "/data_batch_" + std::to_string(b) + ".bin";
            if (!fs::exists(path)) continue;
            Dataset part = read_cifar10_bin(path, stats, "train");
            if (first) {
                train = std::move(part);
                first = false;
            } else {
                std::vector<double> vals(train.features.data(),
                                         train.features.data() + train.features.numel());
                vals.insert(vals.end(), part.features.data(),
                            part.features.data() + part.features.numel());
                Shape s = train.features.shape();
                s[0] += part.features.shape()[0];
                train.features = Tensor(s, std::move(vals));
                train.labels.insert(train.labels.end(), part.labels.begin(), part.labels.end());
            }
        }
        if (first) throw format_error("cifar10: no data_batch_*.bin under '" + c.data_dir + "'");
        t.train = limit_dataset(train, c.train_limit);
        const std::string test_path = c.data_dir + "/test_batch.bin";
        if (fs::exists(test_path))
            t.test = limit_dataset(read_cifar10_bin(test_path, stats, "test"), c.test_limit);
        return t;
    }
    throw config_error("unknown task '" + c.task + "' (spirals, rings, blobs, cifar10)");
}

NetworkShape make_shape(const RunConfig& c, const std::string& scheme_name, std::size_t depth) {
    NetworkShape s;
    s.depth = depth;
    s.scheme = scheme_spec_from_string(scheme_name);
    if (c.h_clamp) s.scheme.h_clamp = {{0.125, 4.0}};
    s.width = c.width;
    s.classes = c.classes;
    s.act = activation_from_string(c.activation);
    if (c.task == "cifar10") {
        s.conv = true;
        s.input_dim = 3;
        s.classes = 10;
    } else {
        s.input_dim = 2;
    }
    return s;
}

struct OutDir {
    std::string path;
    std::vector<std::string> artifacts;

    std::string file(const std::string& name) {
        artifacts.push_back(name);
        return path + "/" + name;
    }
};

void finalize_report(OutDir& out, RunReport report, const RunConfig& cfg,
                     std::chrono::steady_clock::time_point t0) {
    report.command = cfg.command;
    report.config_json = run_config_to_json(cfg);
    report.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.artifacts = out.artifacts;
    write_run_report(out.path + "/report.json", report);
}

// ---------------------------------------------------------------- ode-verify

struct OrderExpectation {
    double target;     // <0: lower-bound check against `bound`
    double tolerance;  // half-width
    double bound;
};

bool order_ok(const std::string& scheme, const std::string& problem, double slope) {
    // rotation gets a wider band; the verner bounds apply to growth/decay only
    if (scheme == "euler") return std::fabs(slope - 1.0) <= (problem == "rotation" ? 0.25 : 0.1);
    if (scheme == "midpoint") return std::fabs(slope - 2.0) <= (problem == "rotation" ? 0.25 : 0.1);
    if (scheme == "rk4") return std::fabs(slope - 4.0) <= (problem == "rotation" ? 0.25 : 0.2);
    if (problem == "rotation") return true;
    if (scheme == "verner") return slope >= 4.0;
    if (scheme == "verner-canonical") return slope >= 7.0;
    return true;
}

int cmd_ode_verify(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    OutDir out{cfg.out_dir, {}};
    fs::create_directories(out.path);
    const auto problems = standard_problems();
    const auto hs = default_h_grid();
    bool all_ok = true;
    RunReport report;
    nlohmann::json diag = nlohmann::json::array();
    std::vector<std::pair<std::string, std::vector<double>>> svg_series;
    for (const auto& p : problems) {
        CsvWriter csv({"scheme", "h", "error", "fitted_order"});
        for (const auto& name : cfg.schemes) {
            const SchemeSpec spec = scheme_spec_from_string(name);
            const Tableau tableau = make_tableau(spec.scheme);
            const OrderEstimate est = measure_order(tableau, p, hs);
            for (std::size_t i = 0; i < est.hs.size(); ++i)
                csv.row({name, fmt_double(est.hs[i]), fmt_double(est.errors[i]),
                         fmt_double(est.slope)});
            const bool ok = order_ok(name, p.name, est.slope);
            all_ok = all_ok && ok;
            std::printf("%-18s %-9s order %6.3f  (residual %.4f%s%s)  %s\n", name.c_str(),
                        p.name.c_str(), est.slope, est.residual,
                        est.endpoints_trimmed ? ", endpoints trimmed" : "",
                        est.underflow_dropped
                            ? (", " + std::to_string(est.underflow_dropped) + " h at roundoff").c_str()
                            : "",
                        ok ? "ok" : "OUT OF TOLERANCE");
            diag.push_back({{"scheme", name},
                            {"problem", p.name},
                            {"order", est.slope},
                            {"residual", est.residual},
                            {"trimmed", est.endpoints_trimmed},
                            {"underflow_dropped", est.underflow_dropped},
                            {"ok", ok}});
            if (p.name == "growth") svg_series.emplace_back(name, est.errors);
        }
        csv.save(out.file("orders_" + p.name + ".csv"));
    }
    svg_line_chart(out.path + "/orders_growth.svg", "global error vs h (growth problem)", hs,
                   svg_series, true);
    out.artifacts.push_back("orders_growth.svg");
    for (const auto& name : cfg.schemes) {
        const Tableau t = make_tableau(scheme_spec_from_string(name).scheme);
        char buf[24];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(t.digest()));
        report.tableau_digests.emplace_back(name, buf);
    }
    report.diagnostics_json = nlohmann::json{{"ode_verify", diag}}.dump();
    finalize_report(out, std::move(report), cfg, t0);
    return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------- dump-tableau

int cmd_dump_tableau(const RunConfig& cfg) {
    const SchemeSpec spec = scheme_spec_from_string(cfg.scheme);
    Tableau t = make_tableau(spec.scheme);
    if (spec.lite) {
        t.output_rule = lite_output_rule(t);
        t.name += "-lite";
    }
    if (spec.adaptive_h) t.default_h_policy = HPolicy::learnable;
    const std::string text = t.to_json_string();
    std::printf("%s\n", text.c_str());
    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        std::ofstream f(cfg.out_dir + "/tableau_" + cfg.scheme + ".json", std::ios::trunc);
        f << text << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------- train

int cmd_train(RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    OutDir out{cfg.out_dir, {}};
    fs::create_directories(out.path);
    const TaskData data = load_task(cfg);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    tc.checkpoint_path = out.file("checkpoint.bin");
    out.artifacts.push_back("checkpoint.bin.json");

    std::size_t start_epoch = 0;
    std::vector<double> velocities;
    const std::vector<double>* vel_ptr = nullptr;
    HONetwork net = [&] {
        if (cfg.resume.empty())
            return HONetwork::build(make_shape(cfg, cfg.scheme, cfg.depth),
                                    split_seed(cfg.seed, "train-net", 0));
        const Checkpoint c = read_checkpoint(cfg.resume);
        start_epoch = c.next_epoch;
        velocities = c.velocities;
        if (!velocities.empty()) vel_ptr = &velocities;
        return restore_network(c);
    }();

    const TrainResult res = train(net, data.train, data.test, tc, start_epoch, vel_ptr);

    std::ofstream csv(out.file("epochs.csv"), std::ios::trunc);
    csv << epochs_to_csv(res.records);
    csv.close();
    std::vector<double> xs;
    std::vector<double> train_loss, test_acc;
    for (const auto& r : res.records) {
        xs.push_back(static_cast<double>(r.epoch));
        train_loss.push_back(r.train_loss);
        test_acc.push_back(r.test_acc);
    }
    svg_line_chart(out.file("curves.svg"), cfg.scheme + " depth " + std::to_string(cfg.depth), xs,
                   {{"train_loss", train_loss}, {"test_acc", test_acc}}, false);

    RunReport report;
    report.epochs = res.records;
    const Tableau tbl = make_tableau(scheme_spec_from_string(cfg.scheme).scheme);
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(tbl.digest()));
    report.tableau_digests.emplace_back(cfg.scheme, buf);
    nlohmann::json diag;
    diag["diverged"] = res.diverged;
    diag["initial_loss"] = res.initial_loss;
    const auto counts = net.param_count();
    diag["trainable_params"] = counts.first;
    diag["learnable_h"] = counts.second;
    report.diagnostics_json = diag.dump();
    finalize_report(out, std::move(report), cfg, t0);
    if (res.diverged)
        std::printf("training diverged (recorded); %zu epoch records\n", res.records.size());
    else
        std::printf("trained %zu epochs; final test acc %.4f\n", res.records.size(),
                    res.records.empty() ? 0.0 : res.records.back().test_acc);
    return 0;
}

// ---------------------------------------------------------------- sweeps

int cmd_sweep_init_probe(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    OutDir out{cfg.out_dir, {}};
    fs::create_directories(out.path);
    const TaskData data = load_task(cfg);
    const Batch probe = probe_batch(data.test, cfg.probe_batch, cfg.seed);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < cfg.probe_seeds; ++i)
        seeds.push_back(split_seed(cfg.seed, "probe-seed", i));
    std::vector<InitProbeResult> rows;
    CsvWriter csv({"scheme", "depth", "seeds", "min_loss", "max_loss", "spread",
                   "median_log_spread"});
    std::vector<std::string> labels;
    std::vector<double> lo, hi;
    for (const auto& name : cfg.schemes) {
        NetworkShape shape = make_shape(cfg, name, cfg.depth);
        InitProbeResult r = init_probe(shape, seeds, probe);
        csv.row({r.scheme, std::to_string(r.depth), std::to_string(seeds.size()),
                 fmt_double(r.min_loss), fmt_double(r.max_loss), fmt_double(r.spread),
                 fmt_double(r.median_log_spread)});
        std::printf("%-18s loss range over seeds [%.4g, %.4g]  median log-spread %.4f\n",
                    r.scheme.c_str(), r.min_loss, r.max_loss, r.median_log_spread);
        labels.push_back(r.scheme);
        lo.push_back(std::max(r.min_loss, 1e-12));
        hi.push_back(std::max(r.max_loss, 1e-12));
        rows.push_back(std::move(r));
    }
    csv.save(out.file("init_probe.csv"));
    bool log_axis = false;
    for (double v : hi) log_axis = log_axis || v > 1e3;
    svg_range_bars(out.file("init_probe.svg"), "untrained loss ranges", labels, lo, hi, log_axis);
    RunReport report;
    report.diagnostics_json = init_probe_to_json(rows);
    finalize_report(out, std::move(report), cfg, t0);
    return 0;
}

int cmd_sweep_lr(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    OutDir out{cfg.out_dir, {}};
    fs::create_directories(out.path);
    const TaskData data = load_task(cfg);
    const std::vector<double> grid = parse_grid(cfg.grid);
    std::vector<LRSweepResult> rows;
    CsvWriter csv({"scheme", "depth", "lr", "converged"});
    std::vector<std::string> labels;
    std::vector<std::vector<bool>> strip;
    for (const auto& name : cfg.schemes) {
        NetworkShape shape = make_shape(cfg, name, cfg.depth);
        LRSweepResult r = lr_sweep(shape, grid, cfg.train.epochs, data.train, data.test, cfg.train,
                                   cfg.seed, cfg.jobs);
        for (std::size_t i = 0; i < grid.size(); ++i)
            csv.row({r.scheme, std::to_string(r.depth), fmt_double(grid[i]),
                     r.converged[i] ? "1" : "0"});
        std::printf("%-18s max stable lr %.3f\n", r.scheme.c_str(), r.max_stable_lr);
        labels.push_back(r.scheme);
        strip.emplace_back(r.converged.begin(), r.converged.end());
        rows.push_back(std::move(r));
    }
    csv.save(out.file("lr_sweep.csv"));
    svg_heat_strip(out.file("lr_sweep.svg"), "learning-rate robustness", labels, grid, strip);
    RunReport report;
    report.diagnostics_json = lr_sweep_to_json(rows);
    finalize_report(out, std::move(report), cfg, t0);
    return 0;
}

int cmd_sweep_degradation(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    OutDir out{cfg.out_dir, {}};
    fs::create_directories(out.path);
    const TaskData data = load_task(cfg);
    const SchemeSpec spec = scheme_spec_from_string(cfg.scheme);
    const auto pts = degradation_sweep(spec, cfg.depths, cfg.width, data.train, data.test,
                                       cfg.train, cfg.seed, cfg.jobs);
    CsvWriter csv({"scheme", "depth", "final_test_acc", "best_test_acc", "diverged"});
    std::vector<double> xs, ys;
    for (const auto& p : pts) {
        csv.row({cfg.scheme, std::to_string(p.depth), fmt_double(p.final_test_acc),
                 fmt_double(p.best_test_acc), p.diverged ? "1" : "0"});
        std::printf("depth %3zu  final acc %.4f%s\n", p.depth, p.final_test_acc,
                    p.diverged ? " (diverged)" : "");
        xs.push_back(static_cast<double>(p.depth));
        ys.push_back(p.final_test_acc);
    }
    csv.save(out.file("degradation.csv"));
    svg_line_chart(out.file("degradation.svg"), cfg.scheme + ": accuracy vs depth", xs,
                   {{cfg.scheme, ys}}, false);
    RunReport report;
    report.diagnostics_json = degradation_to_json(cfg.scheme, pts);
    finalize_report(out, std::move(report), cfg, t0);
    return 0;
}

int cmd_sweep_ttt(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    OutDir out{cfg.out_dir, {}};
    fs::create_directories(out.path);
    const TaskData data = load_task(cfg);
    std::vector<TimeToThreshold> rows;
    CsvWriter csv({"scheme", "target_acc", "epochs_to_target", "reached"});
    std::vector<std::string> labels;
    std::vector<double> lo, hi;
    for (const auto& name : cfg.schemes) {
        NetworkShape shape = make_shape(cfg, name, cfg.depth);
        TimeToThreshold r = time_to_threshold(shape, cfg.target_acc, cfg.max_epochs, data.train,
                                              data.test, cfg.train, cfg.seed);
        csv.row({r.scheme, fmt_double(r.target_acc), std::to_string(r.epochs_to_target),
                 r.reached ? "1" : "0"});
        std::printf("%-18s epochs to %.2f train acc: %zu%s\n", r.scheme.c_str(), r.target_acc,
                    r.epochs_to_target, r.reached ? "" : " (not reached)");
        labels.push_back(r.scheme);
        lo.push_back(0.0);
        hi.push_back(static_cast<double>(r.epochs_to_target));
        rows.push_back(std::move(r));
    }
    csv.save(out.file("time_to_threshold.csv"));
    svg_range_bars(out.file("time_to_threshold.svg"),
                   "epochs to reach " + fmt_double(cfg.target_acc) + " train accuracy", labels, lo,
                   hi, false);
    RunReport report;
    report.diagnostics_json = time_to_threshold_to_json(rows);
    finalize_report(out, std::move(report), cfg, t0);
    return 0;
}

// ---------------------------------------------------------------- report

int cmd_report(const RunConfig& cfg) {
    std::ifstream in(cfg.resume);  // reuses the path slot
    if (!in) {
        std::fprintf(stderr, "report: cannot open '%s'\n", cfg.resume.c_str());
        return 1;
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        std::fprintf(stderr, "report: %s\n", e.what());
        return 1;
    }
    std::printf("command        : %s\n", j.value("command", std::string("?")).c_str());
    std::printf("schema_version : %d\n", j.value("schema_version", 0));
    std::printf("wall_clock_s   : %.3f\n", j.value("wall_clock_s", 0.0));
    std::printf("epoch records  : %zu\n", j.contains("epochs") ? j["epochs"].size() : 0);
    const fs::path dir = fs::path(cfg.resume).parent_path();
    bool all_exist = true;
    if (j.contains("artifacts"))
        for (const auto& a : j["artifacts"]) {
            const fs::path p = dir / a.get<std::string>();
            const bool ok = fs::exists(p);
            all_exist = all_exist && ok;
            std::printf("artifact       : %-32s %s\n", a.get<std::string>().c_str(),
                        ok ? "present" : "MISSING");
        }
    if (j.contains("epochs") && !j["epochs"].empty()) {
        const auto& last = j["epochs"].back();
        std::printf("final          : epoch %zu, train_loss %s, test_acc %s%s\n",
                    last.value("epoch", std::size_t{0}),
                    last["train_loss"].is_null() ? "inf" : fmt_double(last.value("train_loss", 0.0)).c_str(),
                    fmt_double(last.value("test_acc", 0.0)).c_str(),
                    last.value("diverged", false) ? " (diverged)" : "");
    }
    return all_exist ? 0 : 1;
}

}  // namespace

// ---------------------------------------------------------------- main

int cli_main(int argc, const char* const* argv) {
    RunConfig cfg;

    // --config is honored before flag parsing so flags can override it
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") {
            std::ifstream f(argv[i + 1]);
            if (!f) {
                std::fprintf(stderr, "cannot open config file '%s'\n", argv[i + 1]);
                return 2;
            }
            std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
            try {
                run_config_from_json(text, cfg);
            } catch (const config_error& e) {
                std::fprintf(stderr, "%s\n", e.what());
                return 2;
            }
        }

    CLI::App app{"residual networks stacked as explicit Runge-Kutta schemes"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");

    std::string schemes_csv;
    auto add_common = [&](CLI::App* sub, bool with_schemes) {
        sub->fallthrough();  // top-level --config works after the subcommand name
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_option("--seed", cfg.seed, "root seed");
        sub->add_option("--jobs", cfg.jobs, "worker threads for sweep cells");
        sub->add_option("--width", cfg.width, "feature width / channels");
        sub->add_option("--depth", cfg.depth, "total layer count");
        sub->add_option("--task", cfg.task, "spirals | rings | blobs | cifar10");
        sub->add_option("--data-dir", cfg.data_dir, "dataset directory (cifar10)");
        sub->add_option("--activation", cfg.activation, "relu | tanh");
        sub->add_option("--noise", cfg.noise, "generator noise scale");
        sub->add_option("--train-per-class", cfg.train_per_class, "training samples per class");
        sub->add_option("--test-per-class", cfg.test_per_class, "test samples per class");
        sub->add_option("--train-limit", cfg.train_limit, "cap training samples (cifar subset)");
        sub->add_option("--test-limit", cfg.test_limit, "cap test samples (cifar subset)");
        sub->add_option("--classes", cfg.classes, "class count for generators");
        sub->add_option("--lr", cfg.train.lr0, "initial learning rate");
        sub->add_option("--momentum", cfg.train.momentum, "SGD momentum");
        sub->add_option("--weight-decay", cfg.train.weight_decay, "weight decay");
        sub->add_option("--h-weight-decay", [&cfg](const std::vector<std::string>& vals) {
            cfg.train.h_weight_decay = std::stod(vals[0]);
            return true;
        }, "weight decay applied to learnable h (default: same as --weight-decay)");
        sub->add_option("--batch-size", cfg.train.batch_size, "batch size");
        sub->add_option("--epochs", cfg.train.epochs, "epoch count");
        sub->add_option("--milestones", cfg.train.milestones, "lr schedule milestones")->delimiter(',');
        sub->add_option("--lr-factor", cfg.train.lr_factor, "lr decay factor per milestone");
        sub->add_option("--divergence-threshold", cfg.train.divergence_threshold,
                        "divergence = loss above this multiple of the initial loss");
        sub->add_flag("--h-clamp", cfg.h_clamp, "constrain learnable h to [0.125, 4]");
        if (with_schemes)
            sub->add_option("--schemes", schemes_csv, "comma-separated scheme list");
    };

    auto* ode = app.add_subcommand("ode-verify", "measure empirical convergence orders");
    add_common(ode, true);

    auto* dump = app.add_subcommand("dump-tableau", "emit a coefficient table as JSON");
    dump->fallthrough();
    dump->add_option("scheme", cfg.scheme, "scheme name")->required();
    dump->add_option("--out", cfg.out_dir, "also write under this directory");

    auto* tr = app.add_subcommand("train", "train one network and persist a report");
    add_common(tr, false);
    tr->add_option("--scheme", cfg.scheme, "scheme name");
    tr->add_option("--resume", cfg.resume, "checkpoint to resume from");
    tr->add_option("--checkpoint-every", cfg.train.checkpoint_every, "checkpoint interval (epochs)");

    auto* sweep = app.add_subcommand("sweep", "experiment batteries");
    sweep->fallthrough();
    sweep->require_subcommand(1);
    auto* sip = sweep->add_subcommand("init-probe", "untrained loss ranges across seeds");
    add_common(sip, true);
    sip->add_option("--seeds", cfg.probe_seeds, "number of init seeds");
    sip->add_option("--probe-batch", cfg.probe_batch, "probe batch size");
    auto* slr = sweep->add_subcommand("lr", "learning-rate robustness grid");
    add_common(slr, true);
    slr->add_option("--grid", cfg.grid, "lo:hi:step learning-rate grid");
    auto* sdeg = sweep->add_subcommand("degradation", "accuracy vs depth at fixed budget");
    add_common(sdeg, false);
    sdeg->add_option("--scheme", cfg.scheme, "scheme name");
    sdeg->add_option("--depths", cfg.depths, "depth ladder")->delimiter(',');
    auto* sttt = sweep->add_subcommand("time-to-threshold", "epochs to reach a train accuracy");
    add_common(sttt, true);
    sttt->add_option("--target", cfg.target_acc, "train accuracy threshold");
    sttt->add_option("--max-epochs", cfg.max_epochs, "training budget");

    auto* rep = app.add_subcommand("report", "summarize a run report");
    rep->fallthrough();
    rep->add_option("path", cfg.resume, "report.json path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (!schemes_csv.empty()) {
        cfg.schemes.clear();
        std::string cur;
        for (char ch : schemes_csv + ",") {
            if (ch == ',') {
                if (!cur.empty()) cfg.schemes.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
    }

    try {
        if (ode->parsed()) {
            cfg.command = "ode-verify";
            // validate names before any work
            for (const auto& s : cfg.schemes) scheme_spec_from_string(s);
            if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir(cfg);
            return cmd_ode_verify(cfg);
        }
        if (dump->parsed()) {
            cfg.command = "dump-tableau";
            scheme_spec_from_string(cfg.scheme);
            return cmd_dump_tableau(cfg);
        }
        if (tr->parsed()) {
            cfg.command = "train";
            scheme_spec_from_string(cfg.scheme);
            if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir(cfg);
            return cmd_train(cfg);
        }
        if (sweep->parsed()) {
            if (sip->parsed()) {
                cfg.command = "sweep init-probe";
                if (schemes_csv.empty() && cfg.schemes == std::vector<std::string>{"euler", "midpoint", "rk4"})
                    cfg.schemes.push_back("verner");
                for (const auto& s : cfg.schemes) scheme_spec_from_string(s);
                if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir(cfg);
                return cmd_sweep_init_probe(cfg);
            }
            if (slr->parsed()) {
                cfg.command = "sweep lr";
                for (const auto& s : cfg.schemes) scheme_spec_from_string(s);
                parse_grid(cfg.grid);
                if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir(cfg);
                return cmd_sweep_lr(cfg);
            }
            if (sdeg->parsed()) {
                cfg.command = "sweep degradation";
                scheme_spec_from_string(cfg.scheme);
                if (cfg.depths.empty()) throw config_error("degradation: empty depth list");
                if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir(cfg);
                return cmd_sweep_degradation(cfg);
            }
            cfg.command = "sweep time-to-threshold";
            for (const auto& s : cfg.schemes) scheme_spec_from_string(s);
            if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir(cfg);
            return cmd_sweep_ttt(cfg);
        }
        if (rep->parsed()) {
            cfg.command = "report";
            return cmd_report(cfg);
        }
    } catch (const config_error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const contract_error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    return 2;
}

}  // namespace honet
