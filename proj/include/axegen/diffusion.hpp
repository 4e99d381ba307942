// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "axegen/nn/layers.hpp"

namespace axe {

// Linear beta schedule. Tables are indexed by t in [1, T].
class NoiseSchedule {
public:
    static NoiseSchedule linear(int steps = 1000, double beta_1 = 1e-4, double beta_T = 0.02);

    int steps() const { return static_cast<int>(beta_.size()); }
    double beta(int t) const { return beta_.at(static_cast<std::size_t>(t - 1)); }
    double alpha(int t) const { return alpha_.at(static_cast<std::size_t>(t - 1)); }
    double alpha_bar(int t) const { return alpha_bar_.at(static_cast<std::size_t>(t - 1)); }

    nlohmann::json to_json() const;
    static NoiseSchedule from_json(const nlohmann::json& doc);

private:
    std::vector<double> beta_;
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
    double beta_1_ = 0.0;
    double beta_T_ = 0.0;
};

// v_t = sqrt(abar_t) v0 + sqrt(1 - abar_t) eps
void forward_noise(std::span<const float> v0, int t, std::span<const float> eps,
                   const NoiseSchedule& schedule, std::span<float> out);

// Architecture sizes. The paper profile is the full model; the desk profile
// halves every hidden width, drops dropout and shortens the chain for CPU runs.
struct DenoiserShape {
    std::size_t latent = 128;
    std::size_t time_embed = 128;
    std::size_t cond_hidden = 64;
    std::size_t hidden = 512;  // width of each signal-processor projection
    std::size_t down1 = 1024;
    std::size_t down2 = 512;
    std::size_t down3 = 256;
    std::size_t cond_p = 1;    // scalar target or class one-hot width
    float dropout = 0.1f;

    nlohmann::json to_json() const;
    static DenoiserShape from_json(const nlohmann::json& doc);
};

enum class DiffusionProfile { Paper, Desk };
std::string_view to_string(DiffusionProfile p);
DiffusionProfile parse_profile(std::string_view text);

struct DiffusionSettings {
    DenoiserShape shape;
    int steps = 1000;
    double beta_1 = 1e-4;
    double beta_T = 0.02;
};

// Paper: T = 1000, beta 1e-4..0.02. Desk: T = 200 with the beta range scaled
// by 1000/T so the terminal abar stays below 0.01.
DiffusionSettings profile_settings(DiffusionProfile p, std::size_t cond_p_width);

// Signal processor + asymmetric MLP U-Net predicting the added noise.
//
//   time  : sin(t) -> Linear(time_embed, hidden)
//   cond  : [MLP_p(cond_p) | MLP_w(cond_w)] -> Linear(2 cond_hidden, hidden)
//   input : Linear(latent, hidden)
//   down  : 3 hidden -> down1 -> down2 -> down3, each Linear, LayerNorm, ReLU, Dropout
//   mid   : Linear(down3, down3), ReLU
//   up1   : [mid | down3] -> down2, ReLU
//   up2   : [up1 | down2] -> down2, ReLU
//   head  : Linear(down2, latent)
class Denoiser {
public:
    Denoiser(const DenoiserShape& shape, std::uint64_t seed);

    const DenoiserShape& shape() const { return shape_; }

    // Inference; const and safe to share between threads.
    nn::Tensor apply(const nn::Tensor& v_t, std::span<const std::int64_t> t,
                     const nn::Tensor& cond_p, const nn::Tensor& cond_w) const;

    nn::Tensor forward(const nn::Tensor& v_t, std::span<const std::int64_t> t,
                       const nn::Tensor& cond_p, const nn::Tensor& cond_w, bool train);
    void backward(const nn::Tensor& grad_out);

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;
    std::size_t parameter_count() const;

private:
    template <typename Self, typename Fn>
    static void visit(Self& self, Fn&& fn);

    DenoiserShape shape_;
    nn::Linear time_proj_;
    nn::Sequential p_mlp_;
    nn::Sequential w_mlp_;
    nn::Linear cond_proj_;
    nn::Linear in_proj_;
    nn::Sequential down1_;
    nn::Sequential down2_;
    nn::Sequential down3_;
    nn::Sequential mid_;
    nn::Sequential up1_;
    nn::Sequential up2_;
    nn::Linear head_;
};

// Training set for the noise predictor. Latents are already standardized.
struct Phase2Data {
    nn::Tensor latents;  // [N x latent]
    nn::Tensor cond_p;   // [N x cond_p]
    nn::Tensor cond_w;   // [N x 3]
};

struct Phase2Hyper {
    int epochs = 10;
    std::size_t batch_size = 128;
    double lr = 1e-4;
    double weight_decay = 0.01;
    int patience = 2;
    double plateau_factor = 0.1;
    double val_fraction = 0.05;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static Phase2Hyper from_json(const nlohmann::json& doc);
};

struct Phase2EpochMetrics {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct Phase2TrainResult {
    std::vector<Phase2EpochMetrics> history;
    std::vector<std::size_t> val_rows;
};

using Phase2Callback = std::function<void(const Phase2EpochMetrics&)>;

// Minimizes E ||eps - eps_theta(v_t, t, p, w)||^2 with t ~ U[1, T].
Phase2TrainResult train_phase2(Denoiser& model, const NoiseSchedule& schedule,
                               const Phase2Data& data, const Phase2Hyper& hyper,
                               const Phase2Callback& on_epoch = {});

enum class NoiseAblation { None, ZeroCondition, ZeroPrediction };

// Mean squared noise-prediction error on the given rows; noise and timesteps
// are drawn from `seed` so repeated calls compare like with like.
double noise_prediction_loss(const Denoiser& model, const NoiseSchedule& schedule,
                             const Phase2Data& data, std::span<const std::size_t> rows,
                             std::uint64_t seed, NoiseAblation ablation = NoiseAblation::None);

}  // namespace axe
