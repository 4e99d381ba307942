// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "axegen/nn/layers.hpp"

namespace axe::nn {

struct AdamWOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// AdamW with decoupled weight decay (p <- p - lr*wd*p before the moment
// update) and bias-corrected first and second moments.
class AdamW {
public:
    AdamW(std::vector<Parameter*> params, AdamWOptions opts);

    void step();
    void zero_grad();

    double lr() const { return opts_.lr; }
    void set_lr(double lr) { opts_.lr = lr; }
    std::int64_t steps() const { return t_; }
    const AdamWOptions& options() const { return opts_; }

private:
    std::vector<Parameter*> params_;
    std::vector<std::vector<float>> m_;
    std::vector<std::vector<float>> v_;
    AdamWOptions opts_;
    std::int64_t t_ = 0;
};

// Reduce-on-plateau on a minimized metric. A strictly lower value counts as
// improvement; after `patience` consecutive epochs without one, lr is
// multiplied by `factor` and the counter restarts.
class PlateauScheduler {
public:
    PlateauScheduler(int patience, double factor = 0.1);

    // Returns the learning rate to use for the next epoch.
    double observe(double metric, double current_lr);

    int patience() const { return patience_; }
    double factor() const { return factor_; }
    double best() const { return best_; }
    int bad_epochs() const { return bad_epochs_; }
    int reductions() const { return reductions_; }

private:
    int patience_;
    double factor_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_epochs_ = 0;
    int reductions_ = 0;
};

}  // namespace axe::nn
