#pragma once
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "honet/errors.hpp"
#include "honet/rng.hpp"

namespace honet {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

struct TensorData {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized lazily, same length as value
    bool requires_grad = false;
};

// Dense 64-bit tensor, row-major. Copies share the buffer (cheap handles);
// clone() makes an independent copy. Gradients accumulate into `grad` when
// a Tape is active and the tensor participates.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double v) { return Tensor(Shape{1}, {v}); }
    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape(), 0.0); }
    static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0);

    bool defined() const { return d_ != nullptr; }
    const Shape& shape() const { return d_->shape; }
    std::size_t numel() const { return d_->value.size(); }
    std::size_t rank() const { return d_->shape.size(); }

    double* data() { return d_->value.data(); }
    const double* data() const { return d_->value.data(); }
    double item() const;

    Tensor& set_requires_grad(bool on);
    bool requires_grad() const { return d_->requires_grad; }

    /// Allocates (zeroed) gradient storage if absent.
    void ensure_grad();
    bool has_grad() const { return !d_->grad.empty(); }
    double* grad() { return d_->grad.data(); }
    const double* grad() const { return d_->grad.data(); }
    void zero_grad();

    bool all_finite() const;

    /// Deep copy detached from any tape, gradients not carried over.
    Tensor clone() const;

    const std::shared_ptr<TensorData>& ptr() const { return d_; }

  private:
    std::shared_ptr<TensorData> d_;
};

// Reverse-mode tape. Nodes are appended in execution order, so every node
// follows its parents; backward replays the list once, in reverse. A tape is
// confined to the thread that created it.
class Tape {
  public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    void record(std::shared_ptr<TensorData> out, std::function<void()> backward_fn) {
        nodes_.push_back({std::move(out), std::move(backward_fn)});
    }
    std::size_t size() const { return nodes_.size(); }

    /// Seeds d(loss)/d(loss) = 1 and propagates in reverse recording order.
    /// Intermediate (recorded) gradients are reset first, so repeated calls
    /// accumulate exactly once per call into the leaf buffers.
    void backward(const Tensor& loss);

  private:
    struct Node {
        std::shared_ptr<TensorData> out;
        std::function<void()> fn;
    };
    std::vector<Node> nodes_;
    Tape* prev_ = nullptr;
};

/// Backward through the thread's active tape (contract error if none).
void backward(const Tensor& loss);

// ---- elementwise & linear algebra ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_rowvec(const Tensor& a, const Tensor& v);  // (n,d) + (d,)
Tensor scalar_mul(const Tensor& a, double c);
Tensor mul_scalar_tensor(const Tensor& a, const Tensor& s);  // s has numel 1
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor tanh_act(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// base + sum(c_i * t_i); empty term list returns base unchanged.
Tensor scale_add(const Tensor& base, const std::vector<std::pair<double, Tensor>>& terms);

/// sum(c_i * t_i) over a non-empty term list.
Tensor linear_combination(const std::vector<std::pair<double, Tensor>>& terms);

// ---- convolution (3x3, stride 1, same padding, NCHW) ----
Tensor conv2d_3x3(const Tensor& x, const Tensor& w, const Tensor& bias);

/// (n,c,h,w) -> (n,c): mean over the spatial extent.
Tensor global_avg_pool(const Tensor& x);

// ---- batch normalization primitives (no learnable affine part) ----
struct BatchNormResult {
    Tensor out;
    std::vector<double> batch_mean;
    std::vector<double> batch_var;  // biased
};
/// (n,d): normalize each feature over the batch axis.
BatchNormResult batchnorm_feature_train(const Tensor& x, double eps);
Tensor batchnorm_feature_eval(const Tensor& x, const std::vector<double>& running_mean,
                              const std::vector<double>& running_var, double eps);
/// (n,c,h,w): normalize each channel over (n,h,w).
BatchNormResult batchnorm_channel_train(const Tensor& x, double eps);
Tensor batchnorm_channel_eval(const Tensor& x, const std::vector<double>& running_mean,
                              const std::vector<double>& running_var, double eps);

// ---- classification head ----
/// Mean softmax cross-entropy over the batch, numerically stable.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);
/// Per-sample losses, evaluation only (never recorded on a tape).
std::vector<double> per_sample_cross_entropy(const Tensor& logits, const std::vector<int>& labels);
double accuracy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace honet
