#include "honet/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace honet {

std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

Tensor::Tensor(Shape shape, double fill) : d_(std::make_shared<TensorData>()) {
    d_->shape = std::move(shape);
    d_->value.assign(shape_numel(d_->shape), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : d_(std::make_shared<TensorData>()) {
    if (shape_numel(shape) != values.size())
        throw dim_error("tensor init: shape " + shape_str(shape) + " wants " +
                        std::to_string(shape_numel(shape)) + " values, got " +
                        std::to_string(values.size()));
    d_->shape = std::move(shape);
    d_->value = std::move(values);
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev) {
    Tensor t(std::move(shape));
    for (auto& v : t.d_->value) v = rng.gauss(0.0, stddev);
    return t;
}

double Tensor::item() const {
    if (numel() != 1) throw contract_error("item() on tensor of shape " + shape_str(shape()));
    return d_->value[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
    d_->requires_grad = on;
    if (on) ensure_grad();
    return *this;
}

void Tensor::ensure_grad() {
    if (d_->grad.size() != d_->value.size()) d_->grad.assign(d_->value.size(), 0.0);
}

void Tensor::zero_grad() {
    std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
}

bool Tensor::all_finite() const {
    for (double v : d_->value)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor Tensor::clone() const {
    return Tensor(d_->shape, d_->value);
}

// ---------------------------------------------------------------- tape

namespace {
thread_local Tape* g_active_tape = nullptr;

bool tracking(std::initializer_list<const Tensor*> ins) {
    if (g_active_tape == nullptr) return false;
    for (const Tensor* t : ins)
        if (t->requires_grad()) return true;
    return false;
}

// Output gradients may never have been touched (branch not reaching the
// loss); treat that as all-zero and skip propagation.
const std::vector<double>* out_grad(const std::shared_ptr<TensorData>& out) {
    if (out->grad.empty()) return nullptr;
    return &out->grad;
}

void ensure(const std::shared_ptr<TensorData>& d) {
    if (d->grad.size() != d->value.size()) d->grad.assign(d->value.size(), 0.0);
}
}  // namespace

Tape::Tape() {
    prev_ = g_active_tape;
    g_active_tape = this;
}

Tape::~Tape() {
    g_active_tape = prev_;
}

Tape* Tape::active() {
    return g_active_tape;
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw contract_error("backward: loss must be a scalar tensor");
    for (auto& n : nodes_)
        if (!n.out->grad.empty()) std::fill(n.out->grad.begin(), n.out->grad.end(), 0.0);
    auto d = loss.ptr();
    ensure(d);
    d->grad[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->fn();
}

void backward(const Tensor& loss) {
    if (g_active_tape == nullptr) throw contract_error("backward: no active tape on this thread");
    g_active_tape->backward(loss);
}

// ---------------------------------------------------------------- helpers

namespace {

Tensor make_out(Shape shape, std::vector<double> vals, bool track) {
    Tensor out(std::move(shape), std::move(vals));
    if (track) out.set_requires_grad(true);
    return out;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw dim_error(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                        shape_str(b.shape()));
}

}  // namespace

// ---------------------------------------------------------------- ops

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    const std::size_t n = a.numel();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a.data()[i] + b.data()[i];
    const bool track = tracking({&a, &b});
    Tensor out = make_out(a.shape(), std::move(v), track);
    if (track) {
        auto da = a.ptr(), db = b.ptr(), dout = out.ptr();
        Tape::active()->record(out.ptr(), [da, db, dout] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(da);
            ensure(db);
            for (std::size_t i = 0; i < g->size(); ++i) {
                da->grad[i] += (*g)[i];
                db->grad[i] += (*g)[i];
            }
        });
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    const std::size_t n = a.numel();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a.data()[i] - b.data()[i];
    const bool track = tracking({&a, &b});
    Tensor out = make_out(a.shape(), std::move(v), track);
    if (track) {
        auto da = a.ptr(), db = b.ptr(), dout = out.ptr();
        Tape::active()->record(out.ptr(), [da, db, dout] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(da);
            ensure(db);
            for (std::size_t i = 0; i < g->size(); ++i) {
                da->grad[i] += (*g)[i];
                db->grad[i] -= (*g)[i];
            }
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    const std::size_t n = a.numel();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a.data()[i] * b.data()[i];
    const bool track = tracking({&a, &b});
    Tensor out = make_out(a.shape(), std::move(v), track);
    if (track) {
        auto da = a.ptr(), db = b.ptr(), dout = out.ptr();
        Tape::active()->record(out.ptr(), [da, db, dout] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(da);
            ensure(db);
            for (std::size_t i = 0; i < g->size(); ++i) {
                da->grad[i] += (*g)[i] * db->value[i];
                db->grad[i] += (*g)[i] * da->value[i];
            }
        });
    }
    return out;
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
    if (a.rank() != 2 || v.rank() != 1 || a.shape()[1] != v.shape()[0])
        throw dim_error("add_rowvec: " + shape_str(a.shape()) + " vs " + shape_str(v.shape()));
    const std::size_t n = a.shape()[0], d = a.shape()[1];
    std::vector<double> out_v(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out_v[i * d + j] = a.data()[i * d + j] + v.data()[j];
    const bool track = tracking({&a, &v});
    Tensor out = make_out(a.shape(), std::move(out_v), track);
    if (track) {
        auto da = a.ptr(), dv = v.ptr(), dout = out.ptr();
        Tape::active()->record(out.ptr(), [da, dv, dout, n, d] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(da);
            ensure(dv);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    da->grad[i * d + j] += (*g)[i * d + j];
                    dv->grad[j] += (*g)[i * d + j];
                }
        });
    }
    return out;
}

Tensor scalar_mul(const Tensor& a, double c) {
    const std::size_t n = a.numel();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = c * a.data()[i];
    const bool track = tracking({&a});
    Tensor out = make_out(a.shape(), std::move(v), track);
    if (track) {
        auto da = a.ptr();
        auto dout = out.ptr();
        Tape::active()->record(out.ptr(), [da, dout, c] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(da);
            for (std::size_t i = 0; i < g->size(); ++i) da->grad[i] += c * (*g)[i];
        });
    }
    return out;
}

Tensor mul_scalar_tensor(const Tensor& a, const Tensor& s) {
    if (s.numel() != 1)
        throw dim_error("mul_scalar_tensor: scale must be scalar, got " + shape_str(s.shape()));
    const double c = s.data()[0];
    const std::size_t n = a.numel();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = c * a.data()[i];
    const bool track = tracking({&a, &s});
    Tensor out = make_out(a.shape(), std::move(v), track);
    if (track) {
        auto da = a.ptr(), ds = s.ptr(), dout = out.ptr();
        Tape::active()->record(out.ptr(), [da, ds, dout] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(da);
            ensure(ds);
            const double c = ds->value[0];
            double acc = 0.0;
            for (std::size_t i = 0; i < g->size(); ++i) {
                da->grad[i] += c * (*g)[i];
                acc += (*g)[i] * da->value[i];
            }
            ds->grad[0] += acc;
        });
    }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0])
        throw dim_error("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                        shape_str(b.shape()));
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> v(m * n, 0.0);
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = pa[i * k + p];
            const double* rb = pb + p * n;
            double* rv = v.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) rv[j] += aip * rb[j];
        }
    const bool track = tracking({&a, &b});
    Tensor out = make_out({m, n}, std::move(v), track);
    if (track) {
        auto da = a.ptr(), db = b.ptr(), dout = out.ptr();
        Tape::active()->record(out.ptr(), [da, db, dout, m, k, n] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(da);
            ensure(db);
            // dA += G * B^T
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double gij = (*g)[i * n + j];
                    if (gij == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p)
                        da->grad[i * k + p] += gij * db->value[p * n + j];
                }
            // dB += A^T * G
            for (std::size_t p = 0; p < k; ++p)
                for (std::size_t i = 0; i < m; ++i) {
                    const double aip = da->value[i * k + p];
                    if (aip == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j)
                        db->grad[p * n + j] += aip * (*g)[i * n + j];
                }
        });
    }
    return out;
}

Tensor relu(const Tensor& a) {
    const std::size_t n = a.numel();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    const bool track = tracking({&a});
    Tensor out = make_out(a.shape(), std::move(v), track);
    if (track) {
        auto da = a.ptr();
        auto dout = out.ptr();
        Tape::active()->record(out.ptr(), [da, dout] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(da);
            for (std::size_t i = 0; i < g->size(); ++i)
                if (da->value[i] > 0.0) da->grad[i] += (*g)[i];
        });
    }
    return out;
}

Tensor tanh_act(const Tensor& a) {
    const std::size_t n = a.numel();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::tanh(a.data()[i]);
    const bool track = tracking({&a});
    Tensor out = make_out(a.shape(), std::move(v), track);
    if (track) {
        auto dout = out.ptr();
        auto da = a.ptr();
        Tape::active()->record(out.ptr(), [da, dout] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(da);
            for (std::size_t i = 0; i < g->size(); ++i) {
                const double t = dout->value[i];
                da->grad[i] += (*g)[i] * (1.0 - t * t);
            }
        });
    }
    return out;
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += a.data()[i];
    const bool track = tracking({&a});
    Tensor out = make_out({1}, {s}, track);
    if (track) {
        auto da = a.ptr();
        auto dout = out.ptr();
        Tape::active()->record(out.ptr(), [da, dout] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(da);
            for (std::size_t i = 0; i < da->grad.size(); ++i) da->grad[i] += (*g)[0];
        });
    }
    return out;
}

Tensor mean(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.numel());
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += a.data()[i];
    s *= inv;
    const bool track = tracking({&a});
    Tensor out = make_out({1}, {s}, track);
    if (track) {
        auto da = a.ptr();
        auto dout = out.ptr();
        Tape::active()->record(out.ptr(), [da, dout, inv] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(da);
            for (std::size_t i = 0; i < da->grad.size(); ++i) da->grad[i] += inv * (*g)[0];
        });
    }
    return out;
}

Tensor scale_add(const Tensor& base, const std::vector<std::pair<double, Tensor>>& terms) {
    if (terms.empty()) return base;
    for (const auto& [c, t] : terms) {
        (void)c;
        check_same_shape(base, t, "scale_add");
    }
    const std::size_t n = base.numel();
    std::vector<double> v(base.data(), base.data() + n);
    for (const auto& [c, t] : terms)
        for (std::size_t i = 0; i < n; ++i) v[i] += c * t.data()[i];
    bool track = tracking({&base});
    if (!track && Tape::active() != nullptr)
        for (const auto& [c, t] : terms) {
            (void)c;
            if (t.requires_grad()) {
                track = true;
                break;
            }
        }
    Tensor out = make_out(base.shape(), std::move(v), track);
    if (track) {
        auto dbase = base.ptr();
        auto dout = out.ptr();
        std::vector<std::pair<double, std::shared_ptr<TensorData>>> parents;
        parents.reserve(terms.size());
        for (const auto& [c, t] : terms) parents.emplace_back(c, t.ptr());
        Tape::active()->record(out.ptr(), [dbase, dout, parents] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(dbase);
            for (std::size_t i = 0; i < g->size(); ++i) dbase->grad[i] += (*g)[i];
            for (const auto& [c, p] : parents) {
                ensure(p);
                for (std::size_t i = 0; i < g->size(); ++i) p->grad[i] += c * (*g)[i];
            }
        });
    }
    return out;
}

Tensor linear_combination(const std::vector<std::pair<double, Tensor>>& terms) {
    if (terms.empty()) throw contract_error("linear_combination: empty term list");
    const Tensor& first = terms.front().second;
    for (const auto& [c, t] : terms) {
        (void)c;
        check_same_shape(first, t, "linear_combination");
    }
    const std::size_t n = first.numel();
    std::vector<double> v(n, 0.0);
    for (const auto& [c, t] : terms)
        for (std::size_t i = 0; i < n; ++i) v[i] += c * t.data()[i];
    bool track = false;
    if (Tape::active() != nullptr)
        for (const auto& [c, t] : terms) {
            (void)c;
            if (t.requires_grad()) {
                track = true;
                break;
            }
        }
    Tensor out = make_out(first.shape(), std::move(v), track);
    if (track) {
        auto dout = out.ptr();
        std::vector<std::pair<double, std::shared_ptr<TensorData>>> parents;
        parents.reserve(terms.size());
        for (const auto& [c, t] : terms) parents.emplace_back(c, t.ptr());
        Tape::active()->record(out.ptr(), [dout, parents] {
            const auto* g = out_grad(dout);
            if (!g) return;
            for (const auto& [c, p] : parents) {
                ensure(p);
                for (std::size_t i = 0; i < g->size(); ++i) p->grad[i] += c * (*g)[i];
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------- conv

Tensor conv2d_3x3(const Tensor& x, const Tensor& w, const Tensor& bias) {
    if (x.rank() != 4 || w.rank() != 4 || w.shape()[2] != 3 || w.shape()[3] != 3 ||
        w.shape()[1] != x.shape()[1] || bias.rank() != 1 || bias.shape()[0] != w.shape()[0])
        throw dim_error("conv2d_3x3: x " + shape_str(x.shape()) + ", w " + shape_str(w.shape()) +
                        ", bias " + shape_str(bias.shape()));
    const std::size_t N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    const std::size_t F = w.shape()[0];
    std::vector<double> v(N * F * H * W, 0.0);
    const double* px = x.data();
    const double* pw = w.data();
    const double* pb = bias.data();
    auto xi = [&](std::size_t n, std::size_t c, std::size_t i, std::size_t j) {
        return px[((n * C + c) * H + i) * W + j];
    };
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t f = 0; f < F; ++f)
            for (std::size_t i = 0; i < H; ++i)
                for (std::size_t j = 0; j < W; ++j) {
                    double acc = pb[f];
                    for (std::size_t c = 0; c < C; ++c)
                        for (int di = -1; di <= 1; ++di)
                            for (int dj = -1; dj <= 1; ++dj) {
                                const long ii = static_cast<long>(i) + di;
                                const long jj = static_cast<long>(j) + dj;
                                if (ii < 0 || jj < 0 || ii >= static_cast<long>(H) ||
                                    jj >= static_cast<long>(W))
                                    continue;
                                acc += xi(n, c, static_cast<std::size_t>(ii),
                                          static_cast<std::size_t>(jj)) *
                                       pw[((f * C + c) * 3 + (di + 1)) * 3 + (dj + 1)];
                            }
                    v[((n * F + f) * H + i) * W + j] = acc;
                }
    const bool track = tracking({&x, &w, &bias});
    Tensor out = make_out({N, F, H, W}, std::move(v), track);
    if (track) {
        auto dx = x.ptr(), dw = w.ptr(), db = bias.ptr(), dout = out.ptr();
        Tape::active()->record(out.ptr(), [dx, dw, db, dout, N, C, H, W, F] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(dx);
            ensure(dw);
            ensure(db);
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t f = 0; f < F; ++f)
                    for (std::size_t i = 0; i < H; ++i)
                        for (std::size_t j = 0; j < W; ++j) {
                            const double go = (*g)[((n * F + f) * H + i) * W + j];
                            if (go == 0.0) continue;
                            db->grad[f] += go;
                            for (std::size_t c = 0; c < C; ++c)
                                for (int di = -1; di <= 1; ++di)
                                    for (int dj = -1; dj <= 1; ++dj) {
                                        const long ii = static_cast<long>(i) + di;
                                        const long jj = static_cast<long>(j) + dj;
                                        if (ii < 0 || jj < 0 || ii >= static_cast<long>(H) ||
                                            jj >= static_cast<long>(W))
                                            continue;
                                        const std::size_t xoff =
                                            ((n * C + c) * H + static_cast<std::size_t>(ii)) * W +
                                            static_cast<std::size_t>(jj);
                                        const std::size_t woff =
                                            ((f * C + c) * 3 + (di + 1)) * 3 + (dj + 1);
                                        dx->grad[xoff] += go * dw->value[woff];
                                        dw->grad[woff] += go * dx->value[xoff];
                                    }
                        }
        });
    }
    return out;
}

Tensor global_avg_pool(const Tensor& x) {
    if (x.rank() != 4)
        throw dim_error("global_avg_pool: want (n,c,h,w), got " + shape_str(x.shape()));
    const std::size_t N = x.shape()[0], C = x.shape()[1], HW = x.shape()[2] * x.shape()[3];
    const double inv = 1.0 / static_cast<double>(HW);
    std::vector<double> v(N * C, 0.0);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c) {
            double acc = 0.0;
            for (std::size_t p = 0; p < HW; ++p) acc += x.data()[(n * C + c) * HW + p];
            v[n * C + c] = acc * inv;
        }
    const bool track = tracking({&x});
    Tensor out = make_out({N, C}, std::move(v), track);
    if (track) {
        auto dx = x.ptr();
        auto dout = out.ptr();
        Tape::active()->record(out.ptr(), [dx, dout, N, C, HW, inv] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(dx);
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t c = 0; c < C; ++c) {
                    const double gv = (*g)[n * C + c] * inv;
                    for (std::size_t p = 0; p < HW; ++p) dx->grad[(n * C + c) * HW + p] += gv;
                }
        });
    }
    return out;
}

// ---------------------------------------------------------------- batch norm

namespace {

// Shared backward for normalization over a group of positions per feature:
// dx = (g - mean(g) - xhat * mean(g*xhat)) / sqrt(var+eps)
struct BnGroup {
    std::size_t count;
    double inv_std;
};

}  // namespace

BatchNormResult batchnorm_feature_train(const Tensor& x, double eps) {
    if (x.rank() != 2) throw dim_error("batchnorm_feature: want (n,d), got " + shape_str(x.shape()));
    const std::size_t n = x.shape()[0], d = x.shape()[1];
    if (n < 2) throw contract_error("batchnorm_feature: batch of " + std::to_string(n));
    std::vector<double> m(d, 0.0), var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) m[j] += x.data()[i * d + j];
    for (std::size_t j = 0; j < d; ++j) m[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = x.data()[i * d + j] - m[j];
            var[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) var[j] /= static_cast<double>(n);
    std::vector<double> v(n * d);
    std::vector<double> inv_std(d);
    for (std::size_t j = 0; j < d; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + eps);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) v[i * d + j] = (x.data()[i * d + j] - m[j]) * inv_std[j];
    const bool track = tracking({&x});
    Tensor out = make_out(x.shape(), std::move(v), track);
    if (track) {
        auto dx = x.ptr();
        auto dout = out.ptr();
        Tape::active()->record(out.ptr(), [dx, dout, n, d, inv_std] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(dx);
            for (std::size_t j = 0; j < d; ++j) {
                double gm = 0.0, gxm = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    gm += (*g)[i * d + j];
                    gxm += (*g)[i * d + j] * dout->value[i * d + j];
                }
                gm /= static_cast<double>(n);
                gxm /= static_cast<double>(n);
                for (std::size_t i = 0; i < n; ++i)
                    dx->grad[i * d + j] +=
                        ((*g)[i * d + j] - gm - dout->value[i * d + j] * gxm) * inv_std[j];
            }
        });
    }
    return {out, std::move(m), std::move(var)};
}

Tensor batchnorm_feature_eval(const Tensor& x, const std::vector<double>& running_mean,
                              const std::vector<double>& running_var, double eps) {
    if (x.rank() != 2) throw dim_error("batchnorm_feature: want (n,d), got " + shape_str(x.shape()));
    const std::size_t n = x.shape()[0], d = x.shape()[1];
    if (running_mean.size() != d || running_var.size() != d)
        throw dim_error("batchnorm_feature_eval: stats size mismatch");
    std::vector<double> inv_std(d);
    for (std::size_t j = 0; j < d; ++j) inv_std[j] = 1.0 / std::sqrt(running_var[j] + eps);
    std::vector<double> v(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            v[i * d + j] = (x.data()[i * d + j] - running_mean[j]) * inv_std[j];
    const bool track = tracking({&x});
    Tensor out = make_out(x.shape(), std::move(v), track);
    if (track) {
        auto dx = x.ptr();
        auto dout = out.ptr();
        Tape::active()->record(out.ptr(), [dx, dout, n, d, inv_std] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(dx);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) dx->grad[i * d + j] += (*g)[i * d + j] * inv_std[j];
        });
    }
    return out;
}

BatchNormResult batchnorm_channel_train(const Tensor& x, double eps) {
    if (x.rank() != 4)
        throw dim_error("batchnorm_channel: want (n,c,h,w), got " + shape_str(x.shape()));
    const std::size_t N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    const std::size_t per = N * H * W;
    if (per < 2) throw contract_error("batchnorm_channel: too few positions");
    std::vector<double> m(C, 0.0), var(C, 0.0);
    auto off = [&](std::size_t n, std::size_t c, std::size_t p) { return (n * C + c) * H * W + p; };
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t p = 0; p < H * W; ++p) m[c] += x.data()[off(n, c, p)];
        m[c] /= static_cast<double>(per);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t p = 0; p < H * W; ++p) {
                const double d = x.data()[off(n, c, p)] - m[c];
                var[c] += d * d;
            }
        var[c] /= static_cast<double>(per);
    }
    std::vector<double> inv_std(C);
    for (std::size_t c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
    std::vector<double> v(x.numel());
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t p = 0; p < H * W; ++p)
                v[off(n, c, p)] = (x.data()[off(n, c, p)] - m[c]) * inv_std[c];
    const bool track = tracking({&x});
    Tensor out = make_out(x.shape(), std::move(v), track);
    if (track) {
        auto dx = x.ptr();
        auto dout = out.ptr();
        Tape::active()->record(out.ptr(), [dx, dout, N, C, H, W, inv_std] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(dx);
            const std::size_t per = N * H * W;
            auto off = [&](std::size_t n, std::size_t c, std::size_t p) {
                return (n * C + c) * H * W + p;
            };
            for (std::size_t c = 0; c < C; ++c) {
                double gm = 0.0, gxm = 0.0;
                for (std::size_t n = 0; n < N; ++n)
                    for (std::size_t p = 0; p < H * W; ++p) {
                        gm += (*g)[off(n, c, p)];
                        gxm += (*g)[off(n, c, p)] * dout->value[off(n, c, p)];
                    }
                gm /= static_cast<double>(per);
                gxm /= static_cast<double>(per);
                for (std::size_t n = 0; n < N; ++n)
                    for (std::size_t p = 0; p < H * W; ++p)
                        dx->grad[off(n, c, p)] +=
                            ((*g)[off(n, c, p)] - gm - dout->value[off(n, c, p)] * gxm) * inv_std[c];
            }
        });
    }
    return {out, std::move(m), std::move(var)};
}

Tensor batchnorm_channel_eval(const Tensor& x, const std::vector<double>& running_mean,
                              const std::vector<double>& running_var, double eps) {
    if (x.rank() != 4)
        throw dim_error("batchnorm_channel: want (n,c,h,w), got " + shape_str(x.shape()));
    const std::size_t N = x.shape()[0], C = x.shape()[1], HW = x.shape()[2] * x.shape()[3];
    if (running_mean.size() != C || running_var.size() != C)
        throw dim_error("batchnorm_channel_eval: stats size mismatch");
    std::vector<double> inv_std(C);
    for (std::size_t c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(running_var[c] + eps);
    std::vector<double> v(x.numel());
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t p = 0; p < HW; ++p) {
                const std::size_t o = (n * C + c) * HW + p;
                v[o] = (x.data()[o] - running_mean[c]) * inv_std[c];
            }
    const bool track = tracking({&x});
    Tensor out = make_out(x.shape(), std::move(v), track);
    if (track) {
        auto dx = x.ptr();
        auto dout = out.ptr();
        Tape::active()->record(out.ptr(), [dx, dout, N, C, HW, inv_std] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(dx);
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t p = 0; p < HW; ++p) {
                        const std::size_t o = (n * C + c) * HW + p;
                        dx->grad[o] += (*g)[o] * inv_std[c];
                    }
        });
    }
    return out;
}

// ---------------------------------------------------------------- loss

namespace {

void check_labels(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2)
        throw dim_error("cross_entropy: logits must be (n,k), got " + shape_str(logits.shape()));
    if (labels.size() != logits.shape()[0])
        throw dim_error("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(logits.shape()[0]) + " rows");
    const int k = static_cast<int>(logits.shape()[1]);
    for (int y : labels)
        if (y < 0 || y >= k) throw contract_error("cross_entropy: label out of range");
}

double row_xent(const double* z, std::size_t k, int y, double* softmax_out) {
    double mx = z[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, z[j]);
    double se = 0.0;
    for (std::size_t j = 0; j < k; ++j) se += std::exp(z[j] - mx);
    const double lse = mx + std::log(se);
    if (softmax_out != nullptr)
        for (std::size_t j = 0; j < k; ++j) softmax_out[j] = std::exp(z[j] - lse);
    return lse - z[static_cast<std::size_t>(y)];
}

}  // namespace

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    check_labels(logits, labels);
    const std::size_t n = logits.shape()[0], k = logits.shape()[1];
    std::vector<double> soft(n * k);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        loss += row_xent(logits.data() + i * k, k, labels[i], soft.data() + i * k);
    loss /= static_cast<double>(n);
    const bool track = tracking({&logits});
    Tensor out = make_out({1}, {loss}, track);
    if (track) {
        auto dz = logits.ptr();
        auto dout = out.ptr();
        Tape::active()->record(out.ptr(), [dz, dout, soft = std::move(soft), labels, n, k] {
            const auto* g = out_grad(dout);
            if (!g) return;
            ensure(dz);
            const double s = (*g)[0] / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    double d = soft[i * k + j];
                    if (static_cast<int>(j) == labels[i]) d -= 1.0;
                    dz->grad[i * k + j] += s * d;
                }
        });
    }
    return out;
}

std::vector<double> per_sample_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    check_labels(logits, labels);
    const std::size_t n = logits.shape()[0], k = logits.shape()[1];
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = row_xent(logits.data() + i * k, k, labels[i], nullptr);
    return out;
}

double accuracy(const Tensor& logits, const std::vector<int>& labels) {
    check_labels(logits, labels);
    const std::size_t n = logits.shape()[0], k = logits.shape()[1];
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (logits.data()[i * k + j] > logits.data()[i * k + best]) best = j;
        if (static_cast<int>(best) == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace honet
