// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "axegen/nn/rng.hpp"
#include "axegen/nn/tensor.hpp"

namespace axe::nn {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, std::size_t rows, std::size_t cols)
        : name(std::move(n)), value(rows, cols), grad(rows, cols) {}
};

// A differentiable map on row-batched tensors.
//
// `apply` is the inference path: const, no caching, safe to call from several
// threads on shared weights. `forward` caches whatever `backward` needs; the
// pair is used by the single-threaded training loops. `backward` accumulates
// into parameter gradients and returns the gradient w.r.t. the input.
class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor apply(const Tensor& x) const = 0;
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;

    virtual void collect(std::vector<Parameter*>& out) { (void)out; }
    virtual void collect(std::vector<const Parameter*>& out) const { (void)out; }
};

// y = x W + b with W stored [in x out].
class Linear final : public Layer {
public:
    Linear(std::string name, std::size_t in, std::size_t out, Pcg32& rng);

    std::size_t in_features() const { return weight_.value.rows(); }
    std::size_t out_features() const { return weight_.value.cols(); }

    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }
    const Parameter& weight() const { return weight_; }
    const Parameter& bias() const { return bias_; }

    Tensor apply(const Tensor& x) const override;
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect(std::vector<Parameter*>& out) override;
    void collect(std::vector<const Parameter*>& out) const override;

private:
    Parameter weight_;
    Parameter bias_;
    Tensor input_;
};

class ReLU final : public Layer {
public:
    Tensor apply(const Tensor& x) const override;
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    Tensor output_;
};

// Per-row normalization over the feature axis with learned scale and shift.
class LayerNorm final : public Layer {
public:
    LayerNorm(std::string name, std::size_t features, float eps = 1e-5f);

    Tensor apply(const Tensor& x) const override;
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect(std::vector<Parameter*>& out) override;
    void collect(std::vector<const Parameter*>& out) const override;

private:
    Parameter gamma_;
    Parameter beta_;
    float eps_;
    Tensor xhat_;
    std::vector<float> inv_std_;
};

// Inverted dropout: kept units are scaled by 1/(1-rate) during training, so
// inference is the identity.
class Dropout final : public Layer {
public:
    explicit Dropout(float rate = 0.1f, std::uint64_t seed = 0);

    float rate() const { return rate_; }
    void reseed(std::uint64_t seed) { rng_ = Pcg32(seed, 0x0d0f); }

    Tensor apply(const Tensor& x) const override { return x; }
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    float rate_;
    Pcg32 rng_;
    std::vector<float> mask_;
    bool active_ = false;
};

class Sequential final : public Layer {
public:
    Sequential() = default;

    template <typename L, typename... Args>
    L& add(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    std::size_t size() const { return layers_.size(); }
    Layer& operator[](std::size_t i) { return *layers_[i]; }
    const Layer& operator[](std::size_t i) const { return *layers_[i]; }

    Tensor apply(const Tensor& x) const override;
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect(std::vector<Parameter*>& out) override;
    void collect(std::vector<const Parameter*>& out) const override;

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// MLP of Linear layers with ReLU between consecutive layers (none after the
// last). `dims` lists layer widths including input and output.
Sequential make_mlp(const std::string& name, const std::vector<std::size_t>& dims, Pcg32& rng);

// Lookup table [vocab x dim] indexed by integer ids.
class Embedding {
public:
    Embedding(std::string name, std::size_t vocab, std::size_t dim, Pcg32& rng);

    std::size_t vocab() const { return table_.value.rows(); }
    std::size_t dim() const { return table_.value.cols(); }
    Parameter& table() { return table_; }
    const Parameter& table() const { return table_; }

    Tensor apply(std::span<const int> ids) const;
    // Accumulates grad_out rows into the referenced table rows.
    void backward(std::span<const int> ids, const Tensor& grad_out);

private:
    Parameter table_;
};

// Interleaved sin/cos position encoding: component 2i is sin(t w_i) and 2i+1
// is cos(t w_i) with w_i = 10000^(-i / (dim/2)).
std::vector<float> sinusoidal_embedding(std::int64_t t, std::size_t dim = 128);
Tensor sinusoidal_embedding(std::span<const std::int64_t> ts, std::size_t dim = 128);

std::size_t parameter_count(std::span<const Parameter* const> params);
void zero_grad(std::span<Parameter* const> params);
// FNV-1a over the raw little-endian bytes of every parameter value.
std::uint64_t parameter_checksum(std::span<const Parameter* const> params);

}  // namespace axe::nn
