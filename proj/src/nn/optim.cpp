// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/nn/optim.hpp"

#include <cmath>

#include "axegen/error.hpp"

namespace axe::nn {

AdamW::AdamW(std::vector<Parameter*> params, AdamWOptions opts)
    : params_(std::move(params)), opts_(opts) {
    if (!(opts_.lr > 0.0) || !(opts_.beta1 >= 0.0 && opts_.beta1 < 1.0) ||
        !(opts_.beta2 >= 0.0 && opts_.beta2 < 1.0) || !(opts_.eps > 0.0) ||
        !(opts_.weight_decay >= 0.0)) {
        throw ConfigError("invalid AdamW hyperparameters");
    }
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto* p : params_) {
        m_.emplace_back(p->value.size(), 0.0f);
        v_.emplace_back(p->value.size(), 0.0f);
    }
}

void AdamW::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    const auto decay = static_cast<float>(1.0 - opts_.lr * opts_.weight_decay);
    const auto b1 = static_cast<float>(opts_.beta1);
    const auto b2 = static_cast<float>(opts_.beta2);
    const auto step = static_cast<float>(opts_.lr / bc1);
    const auto inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));
    const auto eps = static_cast<float>(opts_.eps);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        float* p = params_[k]->value.data();
        const float* g = params_[k]->grad.data();
        float* m = m_[k].data();
        float* v = v_[k].data();
        const std::size_t n = params_[k]->value.size();
        for (std::size_t i = 0; i < n; ++i) {
            p[i] *= decay;
            m[i] = b1 * m[i] + (1.0f - b1) * g[i];
            v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
            p[i] -= step * m[i] / (std::sqrt(v[i]) * inv_sqrt_bc2 + eps);
        }
    }
}

void AdamW::zero_grad() {
    nn::zero_grad(params_);
}

PlateauScheduler::PlateauScheduler(int patience, double factor)
    : patience_(patience), factor_(factor) {
    if (patience < 0 || !(factor > 0.0 && factor < 1.0)) {
        throw ConfigError("plateau scheduler needs patience >= 0 and factor in (0, 1)");
    }
}

double PlateauScheduler::observe(double metric, double current_lr) {
    if (metric < best_) {
        best_ = metric;
        bad_epochs_ = 0;
        return current_lr;
    }
    ++bad_epochs_;
    if (bad_epochs_ >= patience_) {
        bad_epochs_ = 0;
        ++reductions_;
        return current_lr * factor_;
    }
    return current_lr;
}

}  // namespace axe::nn
