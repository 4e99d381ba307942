// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "axegen/error.hpp"

namespace axe::nn {

LossResult mse_loss(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse");
    LossResult r{0.0, Tensor(pred.rows(), pred.cols())};
    if (pred.empty()) {
        return r;
    }
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    const auto scale = static_cast<float>(2.0 * inv_n);
    const float* p = pred.data();
    const float* t = target.data();
    float* g = r.grad.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const float d = p[i] - t[i];
        sum += static_cast<double>(d) * d;
        g[i] = scale * d;
    }
    r.loss = sum * inv_n;
    return r;
}

LossResult cross_entropy_loss(const Tensor& logits, std::span<const int> labels) {
    if (labels.size() != logits.rows()) {
        throw Error("cross entropy: " + std::to_string(labels.size()) + " labels for logits " +
                    logits.shape_string());
    }
    LossResult r{0.0, Tensor(logits.rows(), logits.cols())};
    if (logits.rows() == 0) {
        return r;
    }
    const std::size_t k = logits.cols();
    const double inv_n = 1.0 / static_cast<double>(logits.rows());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= k) {
            throw Error("cross entropy: label " + std::to_string(y) + " outside " +
                        std::to_string(k) + " classes");
        }
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (const float v : row) {
            z += std::exp(v - mx);
        }
        const double log_z = mx + std::log(z);
        sum += log_z - row[static_cast<std::size_t>(y)];
        auto g = r.grad.row(i);
        for (std::size_t j = 0; j < k; ++j) {
            const double p = std::exp(row[j] - log_z);
            g[j] = static_cast<float>((p - (static_cast<int>(j) == y ? 1.0 : 0.0)) * inv_n);
        }
    }
    r.loss = sum * inv_n;
    return r;
}

std::vector<int> argmax_rows(const Tensor& logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

}  // namespace axe::nn
