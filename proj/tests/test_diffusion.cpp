// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "axegen/conditioning.hpp"
#include "axegen/diffusion.hpp"
#include "axegen/error.hpp"
#include "axegen/nn/rng.hpp"
#include "gradcheck.hpp"

using namespace axe;
using nn::Tensor;

namespace {

std::size_t lin(std::size_t in, std::size_t out) { return in * out + out; }
std::size_t ln(std::size_t n) { return 2 * n; }

// Independent count from the layer list of the architecture.
std::size_t expected_parameters(const DenoiserShape& s) {
    const std::size_t sp = lin(s.time_embed, s.hidden) +                                   // time
                           lin(s.cond_p, s.cond_hidden) + lin(s.cond_hidden, s.cond_hidden) +  // p-MLP
                           lin(3, s.cond_hidden) + lin(s.cond_hidden, s.cond_hidden) +         // w-MLP
                           lin(2 * s.cond_hidden, s.hidden) +                                  // cond proj
                           lin(s.latent, s.hidden);                                            // input
    const std::size_t down = lin(3 * s.hidden, s.down1) + ln(s.down1) + lin(s.down1, s.down2) +
                             ln(s.down2) + lin(s.down2, s.down3) + ln(s.down3);
    const std::size_t rest = lin(s.down3, s.down3) + lin(2 * s.down3, s.down2) +
                             lin(2 * s.down2, s.down2) + lin(s.down2, s.latent);
    return sp + down + rest;
}

Phase2Data toy_data(std::size_t n, std::size_t latent, std::uint64_t seed) {
    nn::Pcg32 rng(seed);
    Phase2Data d;
    d.latents = Tensor(n, latent);
    d.cond_p = Tensor(n, 1);
    d.cond_w = Tensor(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
        const float p = static_cast<float>(rng.uniform());
        d.cond_p(i, 0) = p;
        for (std::size_t k = 0; k < 3; ++k) d.cond_w(i, k) = 0.5f;
        // Latents concentrated near a line parameterized by the condition.
        for (std::size_t j = 0; j < latent; ++j) {
            d.latents(i, j) = static_cast<float>((j % 2 ? 1.5 : -1.5) * (2 * p - 1) + 0.05 * rng.normal());
        }
    }
    return d;
}

}  // namespace

TEST_CASE("noise schedule") {
    const NoiseSchedule s = NoiseSchedule::linear();
    REQUIRE(s.steps() == 1000);
    CHECK(s.beta(1) == doctest::Approx(1e-4));
    CHECK(s.beta(1000) == doctest::Approx(0.02));
    CHECK(s.beta(500) == doctest::Approx(1e-4 + 499.0 / 999.0 * (0.02 - 1e-4)));
    double prod = 1.0;
    for (int t = 1; t <= 1000; ++t) {
        prod *= 1.0 - s.beta(t);
        CHECK(s.alpha(t) == doctest::Approx(1.0 - s.beta(t)));
        CHECK(s.alpha_bar(t) == doctest::Approx(prod).epsilon(1e-9));
        if (t > 1) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    }
    CHECK(s.alpha_bar(1000) < 5e-5);
    const NoiseSchedule one = NoiseSchedule::linear(1, 1e-4, 0.02);
    CHECK(one.alpha_bar(1) == doctest::Approx(1.0 - 1e-4));
    CHECK_THROWS_AS(NoiseSchedule::linear(10, 0.02, 1e-4), ConfigError);
    CHECK_THROWS_AS(NoiseSchedule::linear(10, 0.0, 0.02), ConfigError);
    CHECK_THROWS_AS(NoiseSchedule::linear(10, 1e-4, 1.0), ConfigError);
    CHECK(NoiseSchedule::from_json(s.to_json()).alpha_bar(700) == s.alpha_bar(700));

    const auto desk = profile_settings(DiffusionProfile::Desk, 1);
    const NoiseSchedule ds = NoiseSchedule::linear(desk.steps, desk.beta_1, desk.beta_T);
    CHECK(ds.steps() == 200);
    CHECK(ds.alpha_bar(200) < 0.01);
}

TEST_CASE("forward noising") {
    const NoiseSchedule s = NoiseSchedule::linear();
    nn::Pcg32 rng(1);
    std::vector<float> v0(128), eps(128, 0.0f), out(128);
    for (auto& x : v0) x = static_cast<float>(rng.normal());
    forward_noise(v0, 300, eps, s, out);
    for (std::size_t i = 0; i < 128; ++i) {
        CHECK(out[i] == static_cast<float>(std::sqrt(s.alpha_bar(300))) * v0[i]);
    }
    CHECK(std::sqrt(s.alpha_bar(1000)) < 0.01);
    CHECK_THROWS_AS(forward_noise(v0, 0, eps, s, out), Error);
    CHECK_THROWS_AS(forward_noise(v0, 1001, eps, s, out), Error);

    // Monte-Carlo: mean sqrt(abar) v0 and variance 1 - abar per dimension.
    for (const int t : {1, 10, 100, 500, 1000}) {
        const int draws = 10000;
        std::vector<float> v(4), e(4), o(4);
        v = {0.0f, 1.0f, -2.0f, 0.5f};
        std::vector<double> s1(4, 0.0), s2(4, 0.0);
        for (int i = 0; i < draws; ++i) {
            for (auto& x : e) x = static_cast<float>(rng.normal());
            forward_noise(v, t, e, s, o);
            for (std::size_t j = 0; j < 4; ++j) {
                s1[j] += o[j];
                s2[j] += static_cast<double>(o[j]) * o[j];
            }
        }
        const double target_var = 1.0 - s.alpha_bar(t);
        for (std::size_t j = 0; j < 4; ++j) {
            const double mean = s1[j] / draws;
            const double var = s2[j] / draws - mean * mean;
            CHECK(var == doctest::Approx(target_var).epsilon(0.05));
            CHECK(std::abs(mean - std::sqrt(s.alpha_bar(t)) * v[j]) < 4.0 * std::sqrt(target_var / draws) + 1e-6);
        }
    }
}

TEST_CASE("denoiser architecture audit") {
    const auto paper = profile_settings(DiffusionProfile::Paper, 1);
    CHECK(paper.shape.hidden * 3 == 1536);
    const Denoiser net(paper.shape, 1);
    const std::size_t count = net.parameter_count();
    CHECK(count == expected_parameters(paper.shape));
    CHECK(count >= 3000000);
    CHECK(count <= 3800000);
    MESSAGE("paper-profile denoiser parameters: " << count);

    const auto desk = profile_settings(DiffusionProfile::Desk, 9);
    const Denoiser small(desk.shape, 1);
    CHECK(small.parameter_count() == expected_parameters(desk.shape));
    CHECK(desk.shape.hidden * 2 == paper.shape.hidden);
    CHECK(desk.shape.down1 * 2 == paper.shape.down1);

    nn::Pcg32 rng(3);
    const Tensor v = gradcheck::random_tensor(5, 128, rng);
    const Tensor cp(5, 1, 0.3f);
    const Tensor cw(5, 3, 0.5f);
    const std::vector<std::int64_t> ts = {1, 2, 3, 4, 5};
    const Tensor e1 = net.apply(v, ts, cp, cw);
    const Tensor e2 = net.apply(v, ts, cp, cw);
    CHECK(e1.cols() == 128);
    CHECK(std::memcmp(e1.data(), e2.data(), e1.size() * sizeof(float)) == 0);
    CHECK_THROWS_AS(net.apply(v, ts, Tensor(5, 2), cw), Error);
    CHECK_THROWS_AS(net.apply(v, std::vector<std::int64_t>{1}, cp, cw), Error);
}

TEST_CASE("phase-2 training on a toy latent set") {
    DenoiserShape s;
    s.latent = 8;
    s.time_embed = 16;
    s.cond_hidden = 16;
    s.hidden = 32;
    s.down1 = 64;
    s.down2 = 32;
    s.down3 = 16;
    const NoiseSchedule sched = NoiseSchedule::linear(50, 2e-3, 0.3);
    const Phase2Data data = toy_data(4000, s.latent, 4);
    Phase2Hyper h;
    h.epochs = 6;
    h.batch_size = 64;
    h.lr = 2e-3;
    h.seed = 3;
    Denoiser net(s, 3);
    const auto res = train_phase2(net, sched, data, h);
    REQUIRE(res.history.size() == 6);
    CHECK(res.history[2].train_loss < res.history[0].train_loss);
    const double trained = noise_prediction_loss(net, sched, data, res.val_rows, 11);
    const double zero = noise_prediction_loss(net, sched, data, res.val_rows, 11, NoiseAblation::ZeroPrediction);
    const double no_cond = noise_prediction_loss(net, sched, data, res.val_rows, 11, NoiseAblation::ZeroCondition);
    CHECK(zero == doctest::Approx(1.0).epsilon(0.05));
    CHECK(trained < zero);
    CHECK(trained < no_cond);

    // Conditioning changes the prediction.
    nn::Pcg32 rng(5);
    const Tensor v = gradcheck::random_tensor(3, s.latent, rng);
    const std::vector<std::int64_t> ts = {10, 10, 10};
    const Tensor lo = net.apply(v, ts, Tensor(3, 1, 0.0f), Tensor(3, 3, 0.5f));
    const Tensor hi = net.apply(v, ts, Tensor(3, 1, 1.0f), Tensor(3, 3, 0.5f));
    double diff = 0;
    for (std::size_t i = 0; i < lo.size(); ++i) diff += std::pow(lo.data()[i] - hi.data()[i], 2);
    CHECK(diff > 0.0);

    // Same seed, same parameters.
    Denoiser again(s, 3);
    train_phase2(again, sched, data, h);
    CHECK(nn::parameter_checksum(std::as_const(net).parameters()) ==
          nn::parameter_checksum(std::as_const(again).parameters()));
}

TEST_CASE("phase-2 model standardization and checkpoint") {
    Phase2Model m(CondMode::EdpClass, ClassCounts{}, DiffusionProfile::Desk, 7);
    CHECK(m.n_classes() == 10);
    CHECK(m.denoiser().shape().cond_p == 10);
    nn::Pcg32 rng(2);
    Tensor lat = gradcheck::random_tensor(500, 128, rng, 3.0);
    for (std::size_t i = 0; i < lat.rows(); ++i) lat(i, 5) = 2.0f;  // constant column
    m.set_standardization(lat);
    Tensor z = lat;
    m.standardize(z);
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < z.rows(); ++i) mean += z(i, 0);
    mean /= z.rows();
    for (std::size_t i = 0; i < z.rows(); ++i) var += std::pow(z(i, 0) - mean, 2);
    CHECK(std::abs(mean) < 1e-5);
    CHECK(var / z.rows() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::isfinite(z(0, 5)));
    m.destandardize(z);
    for (std::size_t i = 0; i < 50; ++i) CHECK(z(i, 3) == doctest::Approx(lat(i, 3)).epsilon(1e-5));

    const Tensor one_hot = m.class_condition(std::vector<int>{0, 9});
    CHECK(one_hot(0, 0) == 1.0f);
    CHECK(one_hot(1, 9) == 1.0f);
    CHECK(one_hot(1, 0) == 0.0f);
    CHECK_THROWS_AS(m.class_condition(std::vector<int>{10}), ConfigError);
    CHECK_THROWS_AS(m.runtime_condition(std::vector<float>{0.5f}), ConfigError);

    const auto dir = std::filesystem::temp_directory_path() / "axegen_test_p2";
    std::filesystem::remove_all(dir);
    m.save(dir, {});
    const Phase2Model back = Phase2Model::load(dir);
    CHECK(back.mode() == CondMode::EdpClass);
    CHECK(back.profile() == DiffusionProfile::Desk);
    CHECK(back.schedule().steps() == 200);
    CHECK(nn::parameter_checksum(back.denoiser().parameters()) ==
          nn::parameter_checksum(std::as_const(m).denoiser().parameters()));
    CHECK(std::memcmp(back.latent_mean().data(), m.latent_mean().data(), 128 * sizeof(float)) == 0);
    CHECK(std::memcmp(back.latent_lo().data(), m.latent_lo().data(), 128 * sizeof(float)) == 0);
    CHECK(std::memcmp(back.latent_hi().data(), m.latent_hi().data(), 128 * sizeof(float)) == 0);
    std::filesystem::remove_all(dir);
}
