#include "honet/subnet.hpp"

#include <cmath>

namespace honet {

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw config_error("unknown activation '" + s + "' (relu, tanh)");
}

std::string to_string(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

namespace {
Tensor activate(const Tensor& x, Activation a) {
    return a == Activation::relu ? relu(x) : tanh_act(x);
}
}  // namespace

Tensor NormLayer::forward_feature(const Tensor& x, Mode mode) {
    if (mode == Mode::eval) return batchnorm_feature_eval(x, running_mean, running_var, eps);
    BatchNormResult r = batchnorm_feature_train(x, eps);
    for (std::size_t j = 0; j < running_mean.size(); ++j) {
        running_mean[j] = (1.0 - momentum) * running_mean[j] + momentum * r.batch_mean[j];
        running_var[j] = (1.0 - momentum) * running_var[j] + momentum * r.batch_var[j];
    }
    return r.out;
}

Tensor NormLayer::forward_channel(const Tensor& x, Mode mode) {
    if (mode == Mode::eval) return batchnorm_channel_eval(x, running_mean, running_var, eps);
    BatchNormResult r = batchnorm_channel_train(x, eps);
    for (std::size_t j = 0; j < running_mean.size(); ++j) {
        running_mean[j] = (1.0 - momentum) * running_mean[j] + momentum * r.batch_mean[j];
        running_var[j] = (1.0 - momentum) * running_var[j] + momentum * r.batch_var[j];
    }
    return r.out;
}

StageFunction StageFunction::dense2(std::size_t dim, std::size_t width, Activation act, Rng& rng) {
    StageFunction f;
    f.kind_ = Kind::dense2;
    f.act_ = act;
    f.dim_ = dim;
    f.width_ = width;
    const double s1 = std::sqrt(2.0 / static_cast<double>(dim));
    const double s2 = std::sqrt(2.0 / static_cast<double>(width));
    f.params_.push_back(Tensor::randn({dim, width}, rng, s1).set_requires_grad(true));
    f.params_.push_back(Tensor(Shape{width}, 0.0).set_requires_grad(true));
    f.params_.push_back(Tensor::randn({width, dim}, rng, s2).set_requires_grad(true));
    f.params_.push_back(Tensor(Shape{dim}, 0.0).set_requires_grad(true));
    f.norms_.emplace_back(dim);
    f.norms_.emplace_back(width);
    return f;
}

StageFunction StageFunction::conv2(std::size_t channels, Activation act, Rng& rng) {
    StageFunction f;
    f.kind_ = Kind::conv2;
    f.act_ = act;
    f.dim_ = channels;
    f.width_ = channels;
    const double s = std::sqrt(2.0 / (9.0 * static_cast<double>(channels)));
    f.params_.push_back(Tensor::randn({channels, channels, 3, 3}, rng, s).set_requires_grad(true));
    f.params_.push_back(Tensor(Shape{channels}, 0.0).set_requires_grad(true));
    f.params_.push_back(Tensor::randn({channels, channels, 3, 3}, rng, s).set_requires_grad(true));
    f.params_.push_back(Tensor(Shape{channels}, 0.0).set_requires_grad(true));
    f.norms_.emplace_back(channels);
    f.norms_.emplace_back(channels);
    return f;
}

StageFunction StageFunction::stub_identity() {
    StageFunction f;
    f.kind_ = Kind::stub_identity;
    return f;
}

StageFunction StageFunction::stub_scale(double lambda) {
    StageFunction f;
    f.kind_ = Kind::stub_scale;
    f.lambda_ = lambda;
    return f;
}

Tensor StageFunction::forward(const Tensor& x, Mode mode) {
    switch (kind_) {
        case Kind::stub_identity:
            return x;
        case Kind::stub_scale:
            return scalar_mul(x, lambda_);
        case Kind::dense2: {
            if (x.rank() != 2 || x.shape()[1] != dim_)
                throw dim_error("dense2: want (n," + std::to_string(dim_) + "), got " +
                                shape_str(x.shape()));
            Tensor h = activate(norms_[0].forward_feature(x, mode), act_);
            h = add_rowvec(matmul(h, params_[0]), params_[1]);
            h = activate(norms_[1].forward_feature(h, mode), act_);
            return add_rowvec(matmul(h, params_[2]), params_[3]);
        }
        case Kind::conv2: {
            if (x.rank() != 4 || x.shape()[1] != dim_)
                throw dim_error("conv2: want (n," + std::to_string(dim_) + ",h,w), got " +
                                shape_str(x.shape()));
            Tensor h = activate(norms_[0].forward_channel(x, mode), act_);
            h = conv2d_3x3(h, params_[0], params_[1]);
            h = activate(norms_[1].forward_channel(h, mode), act_);
            return conv2d_3x3(h, params_[2], params_[3]);
        }
    }
    throw contract_error("stage function: unreachable kind");
}

std::size_t StageFunction::param_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.numel();
    return n;
}

}  // namespace honet
