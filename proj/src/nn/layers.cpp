// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/nn/layers.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "axegen/error.hpp"
#include "axegen/nn/kernels.hpp"

namespace axe::nn {

namespace {

void require_cols(const Tensor& x, std::size_t cols, const char* what) {
    if (x.cols() != cols) {
        throw Error(std::string(what) + ": expected [Nx" + std::to_string(cols) + "], got " +
                    x.shape_string());
    }
}

void init_uniform(Tensor& t, float bound, Pcg32& rng) {
    for (float& v : t.span()) {
        v = (2.0f * rng.uniform_f() - 1.0f) * bound;
    }
}

}  // namespace

// ---- Linear ---------------------------------------------------------------

Linear::Linear(std::string name, std::size_t in, std::size_t out, Pcg32& rng)
    : weight_(name + ".weight", in, out), bias_(name + ".bias", 1, out) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(in));
    init_uniform(weight_.value, bound, rng);
    init_uniform(bias_.value, bound, rng);
}

Tensor Linear::apply(const Tensor& x) const {
    require_cols(x, in_features(), weight_.name.c_str());
    const std::size_t n = x.rows();
    const std::size_t out = out_features();
    Tensor y(n, out);
    const float* b = bias_.value.data();
    for (std::size_t i = 0; i < n; ++i) {
        std::memcpy(y.data() + i * out, b, out * sizeof(float));
    }
    kernels::gemm(n, out, in_features(), x.data(), weight_.value.data(), y.data(), true);
    return y;
}

Tensor Linear::forward(const Tensor& x, bool train) {
    if (train) {
        input_ = x;
    }
    return apply(x);
}

Tensor Linear::backward(const Tensor& grad_out) {
    require_cols(grad_out, out_features(), weight_.name.c_str());
    if (grad_out.rows() != input_.rows()) {
        throw Error(weight_.name + ": backward batch " + grad_out.shape_string() +
                    " does not match cached input " + input_.shape_string());
    }
    const std::size_t n = grad_out.rows();
    const std::size_t in = in_features();
    const std::size_t out = out_features();
    kernels::gemm_tn(in, out, n, input_.data(), grad_out.data(), weight_.grad.data(), true);
    float* db = bias_.grad.data();
    for (std::size_t i = 0; i < n; ++i) {
        const float* g = grad_out.data() + i * out;
        for (std::size_t j = 0; j < out; ++j) {
            db[j] += g[j];
        }
    }
    Tensor dx(n, in);
    kernels::gemm_nt(n, in, out, grad_out.data(), weight_.value.data(), dx.data(), false);
    return dx;
}

void Linear::collect(std::vector<Parameter*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

void Linear::collect(std::vector<const Parameter*>& out) const {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

// ---- ReLU -----------------------------------------------------------------

Tensor ReLU::apply(const Tensor& x) const {
    Tensor y = x;
    for (float& v : y.span()) {
        v = v > 0.0f ? v : 0.0f;
    }
    return y;
}

Tensor ReLU::forward(const Tensor& x, bool train) {
    Tensor y = apply(x);
    if (train) {
        output_ = y;
    }
    return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
    require_same_shape(grad_out, output_, "relu backward");
    Tensor dx = grad_out;
    const float* y = output_.data();
    float* d = dx.data();
    for (std::size_t i = 0; i < dx.size(); ++i) {
        if (!(y[i] > 0.0f)) {
            d[i] = 0.0f;
        }
    }
    return dx;
}

// ---- LayerNorm ------------------------------------------------------------

LayerNorm::LayerNorm(std::string name, std::size_t features, float eps)
    : gamma_(name + ".gamma", 1, features), beta_(name + ".beta", 1, features), eps_(eps) {
    gamma_.value.fill(1.0f);
}

Tensor LayerNorm::apply(const Tensor& x) const {
    require_cols(x, gamma_.value.cols(), gamma_.name.c_str());
    const std::size_t d = x.cols();
    Tensor y(x.rows(), d);
    const float* g = gamma_.value.data();
    const float* b = beta_.value.data();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const float* xi = x.data() + i * d;
        float* yi = y.data() + i * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            mean += xi[j];
        }
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = xi[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const auto inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
        const auto m = static_cast<float>(mean);
        for (std::size_t j = 0; j < d; ++j) {
            yi[j] = (xi[j] - m) * inv * g[j] + b[j];
        }
    }
    return y;
}

Tensor LayerNorm::forward(const Tensor& x, bool train) {
    if (!train) {
        return apply(x);
    }
    require_cols(x, gamma_.value.cols(), gamma_.name.c_str());
    const std::size_t d = x.cols();
    xhat_ = Tensor(x.rows(), d);
    inv_std_.assign(x.rows(), 0.0f);
    Tensor y(x.rows(), d);
    const float* g = gamma_.value.data();
    const float* b = beta_.value.data();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const float* xi = x.data() + i * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            mean += xi[j];
        }
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = xi[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const auto inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
        const auto m = static_cast<float>(mean);
        inv_std_[i] = inv;
        float* h = xhat_.data() + i * d;
        float* yi = y.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) {
            h[j] = (xi[j] - m) * inv;
            yi[j] = h[j] * g[j] + b[j];
        }
    }
    return y;
}

Tensor LayerNorm::backward(const Tensor& grad_out) {
    require_same_shape(grad_out, xhat_, "layernorm backward");
    const std::size_t d = grad_out.cols();
    Tensor dx(grad_out.rows(), d);
    const float* g = gamma_.value.data();
    float* dg = gamma_.grad.data();
    float* db = beta_.grad.data();
    for (std::size_t i = 0; i < grad_out.rows(); ++i) {
        const float* dy = grad_out.data() + i * d;
        const float* h = xhat_.data() + i * d;
        double sum_gdy = 0.0;
        double sum_gdy_h = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double gdy = static_cast<double>(g[j]) * dy[j];
            sum_gdy += gdy;
            sum_gdy_h += gdy * h[j];
            dg[j] += dy[j] * h[j];
            db[j] += dy[j];
        }
        const double mean_gdy = sum_gdy / static_cast<double>(d);
        const double mean_gdy_h = sum_gdy_h / static_cast<double>(d);
        float* dxi = dx.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) {
            const double gdy = static_cast<double>(g[j]) * dy[j];
            dxi[j] = static_cast<float>(inv_std_[i] * (gdy - mean_gdy - h[j] * mean_gdy_h));
        }
    }
    return dx;
}

void LayerNorm::collect(std::vector<Parameter*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
}

void LayerNorm::collect(std::vector<const Parameter*>& out) const {
    out.push_back(&gamma_);
    out.push_back(&beta_);
}

// ---- Dropout --------------------------------------------------------------

Dropout::Dropout(float rate, std::uint64_t seed) : rate_(rate), rng_(seed, 0x0d0f) {
    if (!(rate >= 0.0f && rate < 1.0f)) {
        throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    }
}

Tensor Dropout::forward(const Tensor& x, bool train) {
    active_ = train && rate_ > 0.0f;
    if (!active_) {
        return x;
    }
    const float scale = 1.0f / (1.0f - rate_);
    mask_.resize(x.size());
    Tensor y = x;
    float* d = y.data();
    for (std::size_t i = 0; i < y.size(); ++i) {
        mask_[i] = rng_.uniform_f() < rate_ ? 0.0f : scale;
        d[i] *= mask_[i];
    }
    return y;
}

Tensor Dropout::backward(const Tensor& grad_out) {
    if (!active_) {
        return grad_out;
    }
    if (grad_out.size() != mask_.size()) {
        throw Error("dropout backward: gradient " + grad_out.shape_string() +
                    " does not match cached mask of " + std::to_string(mask_.size()));
    }
    Tensor dx = grad_out;
    float* d = dx.data();
    for (std::size_t i = 0; i < dx.size(); ++i) {
        d[i] *= mask_[i];
    }
    return dx;
}

// ---- Sequential -----------------------------------------------------------

Tensor Sequential::apply(const Tensor& x) const {
    Tensor h = x;
    for (const auto& l : layers_) {
        h = l->apply(h);
    }
    return h;
}

Tensor Sequential::forward(const Tensor& x, bool train) {
    Tensor h = x;
    for (auto& l : layers_) {
        h = l->forward(h, train);
    }
    return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = (*it)->backward(g);
    }
    return g;
}

void Sequential::collect(std::vector<Parameter*>& out) {
    for (auto& l : layers_) {
        l->collect(out);
    }
}

void Sequential::collect(std::vector<const Parameter*>& out) const {
    for (const auto& l : layers_) {
        static_cast<const Layer&>(*l).collect(out);
    }
}

Sequential make_mlp(const std::string& name, const std::vector<std::size_t>& dims, Pcg32& rng) {
    AXE_CHECK(dims.size() >= 2, "mlp needs at least input and output widths");
    Sequential s;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        s.add<Linear>(name + "." + std::to_string(i), dims[i], dims[i + 1], rng);
        if (i + 2 < dims.size()) {
            s.add<ReLU>();
        }
    }
    return s;
}

// ---- Embedding ------------------------------------------------------------

Embedding::Embedding(std::string name, std::size_t vocab, std::size_t dim, Pcg32& rng)
    : table_(std::move(name) + ".table", vocab, dim) {
    for (float& v : table_.value.span()) {
        v = static_cast<float>(rng.normal());
    }
}

Tensor Embedding::apply(std::span<const int> ids) const {
    Tensor out(ids.size(), dim());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab()) {
            throw Error(table_.name + ": id " + std::to_string(ids[i]) + " outside vocabulary of " +
                        std::to_string(vocab()));
        }
        const auto src = table_.value.row(static_cast<std::size_t>(ids[i]));
        std::memcpy(out.data() + i * dim(), src.data(), dim() * sizeof(float));
    }
    return out;
}

void Embedding::backward(std::span<const int> ids, const Tensor& grad_out) {
    if (grad_out.rows() != ids.size() || grad_out.cols() != dim()) {
        throw Error(table_.name + ": gradient " + grad_out.shape_string() + " does not match [" +
                    std::to_string(ids.size()) + "x" + std::to_string(dim()) + "]");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto dst = table_.grad.row(static_cast<std::size_t>(ids[i]));
        const auto src = grad_out.row(i);
        for (std::size_t j = 0; j < dim(); ++j) {
            dst[j] += src[j];
        }
    }
}

// ---- helpers --------------------------------------------------------------

std::vector<float> sinusoidal_embedding(std::int64_t t, std::size_t dim) {
    AXE_CHECK(dim >= 2 && dim % 2 == 0, "sinusoidal embedding dimension must be even");
    const std::size_t half = dim / 2;
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < half; ++i) {
        const double freq =
            std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
        const double arg = static_cast<double>(t) * freq;
        out[2 * i] = static_cast<float>(std::sin(arg));
        out[2 * i + 1] = static_cast<float>(std::cos(arg));
    }
    return out;
}

Tensor sinusoidal_embedding(std::span<const std::int64_t> ts, std::size_t dim) {
    Tensor out(ts.size(), dim);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto row = sinusoidal_embedding(ts[i], dim);
        std::memcpy(out.data() + i * dim, row.data(), dim * sizeof(float));
    }
    return out;
}

std::size_t parameter_count(std::span<const Parameter* const> params) {
    std::size_t n = 0;
    for (const auto* p : params) {
        n += p->value.size();
    }
    return n;
}

void zero_grad(std::span<Parameter* const> params) {
    for (auto* p : params) {
        p->grad.zero();
    }
}

std::uint64_t parameter_checksum(std::span<const Parameter* const> params) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto* p : params) {
        for (const float v : p->value.span()) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
            for (int b = 0; b < 4; ++b) {
                h ^= (bits >> (8 * b)) & 0xffu;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

}  // namespace axe::nn
