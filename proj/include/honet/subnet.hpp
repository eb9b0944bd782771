#pragma once
#include <cstddef>
#include <string>
#include <vector>

#include "honet/tensor.hpp"

namespace honet {

enum class Activation { relu, tanh };
enum class Mode { train, eval };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

// Batch normalization state: running statistics only, no learnable scale or
// shift. eps 1e-5, momentum 0.1.
struct NormLayer {
    double eps = 1e-5;
    double momentum = 0.1;
    std::vector<double> running_mean;
    std::vector<double> running_var;

    explicit NormLayer(std::size_t features = 0)
        : running_mean(features, 0.0), running_var(features, 1.0) {}

    Tensor forward_feature(const Tensor& x, Mode mode);
    Tensor forward_channel(const Tensor& x, Mode mode);
};

// The learnable map applied at every stage of a block. Input and output
// shapes match so the residual add is always well-formed. Layer order is
// pre-activation: norm -> act -> affine, twice; the raw output of the second
// affine is what shortcuts are added to.
class StageFunction {
  public:
    enum class Kind { dense2, conv2, stub_identity, stub_scale };

    static StageFunction dense2(std::size_t dim, std::size_t width, Activation act, Rng& rng);
    static StageFunction conv2(std::size_t channels, Activation act, Rng& rng);
    static StageFunction stub_identity();
    static StageFunction stub_scale(double lambda);

    Tensor forward(const Tensor& x, Mode mode);

    Kind kind() const { return kind_; }
    double lambda() const { return lambda_; }
    std::size_t param_count() const;
    std::vector<Tensor>& params() { return params_; }
    const std::vector<Tensor>& params() const { return params_; }
    std::vector<NormLayer>& norms() { return norms_; }
    const std::vector<NormLayer>& norms() const { return norms_; }

  private:
    StageFunction() = default;
    Kind kind_ = Kind::stub_identity;
    Activation act_ = Activation::relu;
    double lambda_ = 1.0;
    std::size_t dim_ = 0;
    std::size_t width_ = 0;
    std::vector<Tensor> params_;  // w1, b1, w2, b2
    std::vector<NormLayer> norms_;
};

}  // namespace honet
