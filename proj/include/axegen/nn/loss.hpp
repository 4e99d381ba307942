// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "axegen/nn/tensor.hpp"

namespace axe::nn {

struct LossResult {
    double loss = 0.0;
    Tensor grad;  // d loss / d prediction
};

// Mean over all elements of (pred - target)^2.
LossResult mse_loss(const Tensor& pred, const Tensor& target);

// Mean over rows of -log softmax(logits)[label].
LossResult cross_entropy_loss(const Tensor& logits, std::span<const int> labels);

// Row-wise argmax, ties to the lowest index.
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace axe::nn
