#include "honet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace honet {

void TrainConfig::validate() const {
    if (lr0 <= 0.0) throw config_error("train: lr0 must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw config_error("train: momentum must be in [0,1)");
    if (batch_size < 1) throw config_error("train: batch_size must be >= 1");
    for (std::size_t i = 0; i < milestones.size(); ++i) {
        if (i > 0 && milestones[i] <= milestones[i - 1])
            throw config_error("train: milestones must be strictly increasing");
        if (milestones[i] >= epochs && epochs > 0)
            throw config_error("train: milestone " + std::to_string(milestones[i]) +
                               " not below epochs " + std::to_string(epochs));
    }
}

double lr_at(const TrainConfig& c, std::size_t epoch) {
    if (epoch >= c.epochs) throw contract_error("lr_at: epoch " + std::to_string(epoch) +
                                                " out of range [0," + std::to_string(c.epochs) + ")");
    double lr = c.lr0;
    for (std::size_t m : c.milestones)
        if (m <= epoch) lr *= c.lr_factor;
    return lr;
}

Sgd::Sgd(std::vector<Param> params, double momentum, double weight_decay,
         std::optional<double> h_weight_decay)
    : params_(std::move(params)),
      momentum_(momentum),
      weight_decay_(weight_decay),
      h_weight_decay_(h_weight_decay.value_or(weight_decay)) {
    velocity_.reserve(params_.size());
    for (const auto& p : params_) velocity_.emplace_back(p.tensor.numel(), 0.0);
}

void Sgd::step(double lr) {
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Param& p = params_[pi];
        if (!p.tensor.has_grad())
            throw contract_error("sgd_step: parameter '" + p.name + "' has no gradient");
        const double wd = p.is_h ? (p.decay ? h_weight_decay_ : 0.0) : (p.decay ? weight_decay_ : 0.0);
        double* v = velocity_[pi].data();
        double* w = p.tensor.data();
        const double* g = p.tensor.grad();
        for (std::size_t i = 0; i < p.tensor.numel(); ++i) {
            v[i] = momentum_ * v[i] + (g[i] + wd * w[i]);
            w[i] -= lr * v[i];
        }
        if (p.clamp) {
            for (std::size_t i = 0; i < p.tensor.numel(); ++i)
                w[i] = std::min(p.clamp->second, std::max(p.clamp->first, w[i]));
        }
        p.tensor.zero_grad();
    }
}

void Sgd::zero_grad() {
    for (auto& p : params_) {
        p.tensor.ensure_grad();
        p.tensor.zero_grad();
    }
}

std::vector<double> Sgd::velocity_flat() const {
    std::vector<double> flat;
    for (const auto& v : velocity_) flat.insert(flat.end(), v.begin(), v.end());
    return flat;
}

void Sgd::set_velocity_flat(const std::vector<double>& flat) {
    std::size_t off = 0;
    for (auto& v : velocity_) {
        if (off + v.size() > flat.size()) throw format_error("sgd: velocity buffer too short");
        std::copy(flat.begin() + static_cast<long>(off), flat.begin() + static_cast<long>(off + v.size()),
                  v.begin());
        off += v.size();
    }
    if (off != flat.size()) throw format_error("sgd: velocity buffer too long");
}

namespace {

struct EvalStats {
    double loss;
    double acc;
};

EvalStats evaluate(HONetwork& net, const Dataset& data, std::size_t batch_size) {
    double loss_sum = 0.0;
    double acc_sum = 0.0;
    std::size_t n = 0;
    // fixed order: evaluation does not consume randomness
    for (std::size_t from = 0; from < data.size(); from += batch_size) {
        const std::size_t to = std::min(data.size(), from + batch_size);
        std::vector<std::size_t> idx(to - from);
        for (std::size_t i = from; i < to; ++i) idx[i - from] = i;
        // slice without shuffling
        const Shape& fs = data.features.shape();
        std::size_t stride = 1;
        for (std::size_t k = 1; k < fs.size(); ++k) stride *= fs[k];
        Shape bs = fs;
        bs[0] = to - from;
        std::vector<double> vals((to - from) * stride);
        std::vector<int> labels(to - from);
        for (std::size_t i = from; i < to; ++i) {
            std::copy(data.features.data() + i * stride, data.features.data() + (i + 1) * stride,
                      vals.begin() + static_cast<long>((i - from) * stride));
            labels[i - from] = data.labels[i];
        }
        Tensor xb(bs, std::move(vals));
        Tensor logits = net.forward(xb, Mode::eval);
        const auto losses = per_sample_cross_entropy(logits, labels);
        for (double l : losses) loss_sum += l;
        acc_sum += accuracy(logits, labels) * static_cast<double>(labels.size());
        n += labels.size();
    }
    return {loss_sum / static_cast<double>(n), acc_sum / static_cast<double>(n)};
}

}  // namespace

TrainResult train(HONetwork& net, const Dataset& train_data, const Dataset& test_data,
                  const TrainConfig& config, std::size_t start_epoch,
                  const std::vector<double>* velocities) {
    config.validate();
    if (train_data.size() == 0) throw contract_error("train: empty dataset");
    TrainResult result;
    Sgd opt(net.params(), config.momentum, config.weight_decay, config.h_weight_decay);
    if (velocities != nullptr) opt.set_velocity_flat(*velocities);
    bool have_initial = false;

    for (std::size_t epoch = start_epoch; epoch < config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = lr_at(config, epoch);
        auto epoch_batches =
            batches(train_data, config.batch_size, split_seed(config.seed, "epoch-shuffle", epoch));
        double loss_sum = 0.0;
        double acc_sum = 0.0;
        std::size_t seen = 0;
        bool finite = true;
        for (auto& batch : epoch_batches) {
            double batch_loss;
            try {
                Tape tape;
                Tensor logits = net.forward(batch.features, Mode::train);
                Tensor loss = softmax_cross_entropy(logits, batch.labels);
                batch_loss = loss.item();
                if (!std::isfinite(batch_loss)) {
                    finite = false;
                    break;
                }
                acc_sum += accuracy(logits, batch.labels) * static_cast<double>(batch.labels.size());
                tape.backward(loss);
                opt.step(lr);
            } catch (const divergence_error&) {
                finite = false;
                break;
            }
            if (!have_initial) {
                result.initial_loss = batch_loss;
                have_initial = true;
            }
            loss_sum += batch_loss * static_cast<double>(batch.labels.size());
            seen += batch.labels.size();
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        if (!finite || seen == 0) {
            rec.train_loss = std::numeric_limits<double>::infinity();
            rec.train_acc = 0.0;
            rec.diverged = true;
        } else {
            rec.train_loss = loss_sum / static_cast<double>(seen);
            rec.train_acc = acc_sum / static_cast<double>(seen);
            if (have_initial && rec.train_loss > config.divergence_threshold * result.initial_loss)
                rec.diverged = true;
        }
        if (!rec.diverged && test_data.size() > 0) {
            try {
                const EvalStats ev = evaluate(net, test_data, config.batch_size);
                rec.test_loss = ev.loss;
                rec.test_acc = ev.acc;
            } catch (const divergence_error&) {
                rec.test_loss = std::numeric_limits<double>::infinity();
                rec.diverged = true;
            }
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.records.push_back(rec);
        if (!config.checkpoint_path.empty() && config.checkpoint_every > 0 &&
            (epoch + 1) % config.checkpoint_every == 0)
            write_checkpoint(config.checkpoint_path, net, epoch + 1, opt.velocity_flat());
        if (rec.diverged) {
            result.diverged = true;
            break;
        }
    }
    if (!config.checkpoint_path.empty() && !result.diverged && config.epochs > start_epoch)
        write_checkpoint(config.checkpoint_path, net, config.epochs, opt.velocity_flat());
    return result;
}

}  // namespace honet
