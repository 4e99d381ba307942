// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <utility>

#include "axegen/dataset.hpp"
#include "axegen/error.hpp"
#include "axegen/nn/loss.hpp"
#include "axegen/nn/rng.hpp"
#include "axegen/phase1.hpp"
#include "gradcheck.hpp"

using namespace axe;
using nn::Tensor;

namespace {

// 3*3*2*2*2*2*2 = 288 points.
DesignGrid small_grid() {
    return DesignGrid("small", {{{4, 16, 64}, {4, 16, 64}, {4096, 65536}, {4096, 65536},
                                 {4096, 65536}, {2, 8}}},
                      {LoopOrder::MNK, LoopOrder::NMK});
}

Dataset small_dataset() {
    return generate({{16, 256, 512}, {200, 64, 3000}}, small_grid(), CostParams{}, Provenance{});
}

std::size_t linear_params(std::size_t in, std::size_t out) { return in * out + out; }

}  // namespace

TEST_CASE("phase-1 architecture audit") {
    const Dataset ds = small_dataset();
    for (const auto mode : {Phase1Mode::Runtime, Phase1Mode::PowerPerf, Phase1Mode::Edp}) {
        const Phase1Model model(mode, training_grid(), ds.normalizer, 3);
        const std::size_t n_p = target_count(mode);
        const std::size_t enc = linear_params(14, 512) + linear_params(512, 256) + linear_params(256, 128);
        const std::size_t dec = linear_params(128, 256) + linear_params(256, 512) + linear_params(512, 14);
        const std::size_t emb = 2 * 8 + linear_params(8, 2);
        const std::size_t pp = linear_params(3, 256) + linear_params(256, 256) + linear_params(256, 128) +
                               linear_params(128, n_p) + linear_params(128, n_p);
        CHECK(nn::parameter_count(model.parameters()) == enc + dec + emb + pp);
        CHECK(model.pp().outputs() == n_p);
    }
    CHECK(target_count(Phase1Mode::PowerPerf) == 2);
    CHECK(parse_phase1_mode("power_perf") == Phase1Mode::PowerPerf);
    CHECK_THROWS_AS(parse_phase1_mode("speed"), ConfigError);
}

TEST_CASE("encode and decode shapes and consistency") {
    const Dataset ds = small_dataset();
    const Phase1Model model(Phase1Mode::Runtime, ds.grid, ds.normalizer, 9);
    const auto configs = ds.grid.enumerate();
    const Tensor all = model.encode(configs);
    REQUIRE(all.rows() == configs.size());
    REQUIRE(all.cols() == kLatentDim);
    CHECK(all.all_finite());
    // Batch encode equals one-at-a-time encodes.
    for (std::size_t i = 0; i < configs.size(); i += 37) {
        const Tensor one = model.encode(std::span(&configs[i], 1));
        CHECK(std::memcmp(one.data(), all.row(i).data(), kLatentDim * sizeof(float)) == 0);
    }
    const Tensor again = model.encode(configs);
    CHECK(std::memcmp(again.data(), all.data(), all.size() * sizeof(float)) == 0);
    const auto d = model.ae().decode(all);
    CHECK(d.loop_logits.cols() == 2);
    CHECK(d.numeric.cols() == kNumNumeric);
    CHECK(d.raw.all_finite());
    const auto decoded = model.decode_to_grid(all, ds.grid);
    for (const auto& hw : decoded) CHECK(ds.grid.contains(hw));
}

TEST_CASE("joint phase-1 loss gradients") {
    const Dataset ds = small_dataset();
    for (const auto mode : {Phase1Mode::Runtime, Phase1Mode::PowerPerf}) {
        Phase1Model model(mode, ds.grid, ds.normalizer, 4);
        std::vector<HWConfig> hw;
        std::vector<Workload> wl;
        Tensor target(4, target_count(mode));
        for (std::size_t i = 0; i < 4; ++i) {
            const auto& row = ds.rows[i * 131];
            hw.push_back(row.hw);
            wl.push_back(row.w);
            const auto t = row_targets(row, ds.stats_of_row(i * 131), mode);
            std::copy(t.begin(), t.end(), target.row(i).begin());
        }
        const HwBatch b = model.make_batch(hw, wl);
        const auto loss = [&] {
            auto f = model.ae().forward(b.numeric, b.loops);
            const Tensor pred = model.pp().forward(f.latent, b.workload, true);
            return nn::mse_loss(f.out.raw, f.input).loss +
                   nn::cross_entropy_loss(f.out.loop_logits, b.loops).loss +
                   nn::mse_loss(pred, target).loss;
        };
        auto params = model.parameters();
        // Zero-initialised biases leave dead-unit rows exactly on a ReLU kink.
        nn::Pcg32 brng(12);
        for (auto* p : params) {
            if (p->name.ends_with("bias")) {
                for (float& v : p->value.span()) v = static_cast<float>(0.2 * brng.uniform() - 0.1);
            }
        }
        nn::zero_grad(params);
        auto f = model.ae().forward(b.numeric, b.loops);
        const Tensor pred = model.pp().forward(f.latent, b.workload, true);
        const auto recon = nn::mse_loss(f.out.raw, f.input);
        const auto ce = nn::cross_entropy_loss(f.out.loop_logits, b.loops);
        const auto pl = nn::mse_loss(pred, target);
        Tensor d_target = recon.grad;
        for (float& g : d_target.span()) g = -g;
        const Tensor d_latent = model.pp().backward(pl.grad);
        model.ae().backward(b.loops, d_latent, recon.grad, ce.grad, d_target);

        std::vector<gradcheck::Target> targets;
        for (auto* p : params) targets.push_back(gradcheck::param_target(*p));
        // Whole-model check in float: same tolerance as the denoiser's.
        const auto rep = gradcheck::check(targets, loss, 1e-3, 48, true, 1e-2);
        INFO("worst tensor: " << rep.worst_name << ", skipped " << rep.skipped << "/" << rep.probed);
        CHECK(rep.worst <= 2e-2);
        CHECK(rep.skipped * 10 <= rep.probed);

        // The predictor's input gradient matches its backward pass.
        nn::Pcg32 grng(1);
        const Tensor g = gradcheck::random_tensor(4, target_count(mode), grng);
        model.pp().forward(f.latent, b.workload, true);
        const Tensor via_backward = model.pp().backward(g);
        const Tensor direct = model.pp().input_gradient(g);
        for (std::size_t i = 0; i < direct.size(); ++i) {
            CHECK(direct.data()[i] == doctest::Approx(via_backward.data()[i]).epsilon(1e-5));
        }
    }
}

TEST_CASE("phase-1 training on a small dataset") {
    const Dataset ds = small_dataset();
    Phase1Hyper h;
    h.epochs = 3;
    h.batch_size = 32;
    h.lr = 1e-3;
    h.seed = 5;
    for (const auto mode : {Phase1Mode::Runtime, Phase1Mode::PowerPerf, Phase1Mode::Edp}) {
        Phase1Model model(mode, ds.grid, ds.normalizer, h.seed);
        int calls = 0;
        const auto res = train_phase1(model, ds, h, [&](const Phase1EpochMetrics&) { ++calls; });
        CHECK(calls == 3);
        REQUIRE(res.history.size() == 3);
        CHECK(res.history[2].train_loss < res.history[0].train_loss);
        CHECK(std::isfinite(res.validation.pp_median_abs_rel_error));
        std::vector<Workload> wl(5, ds.suite[0]);
        const Tensor lat = model.encode(std::vector<HWConfig>(5, ds.grid.at(3)));
        CHECK(model.predict(lat, wl).cols() == target_count(mode));
    }

    // Identical seeds give identical parameters.
    Phase1Model a(Phase1Mode::Runtime, ds.grid, ds.normalizer, 5);
    Phase1Model b(Phase1Mode::Runtime, ds.grid, ds.normalizer, 5);
    train_phase1(a, ds, h);
    train_phase1(b, ds, h);
    CHECK(nn::parameter_checksum(std::as_const(a).parameters()) ==
          nn::parameter_checksum(std::as_const(b).parameters()));
}

TEST_CASE("predictor reads the latent, not row identity") {
    const Dataset ds = small_dataset();
    Phase1Hyper h;
    h.epochs = 40;
    h.batch_size = 32;
    h.lr = 1e-3;
    h.seed = 2;
    h.patience = 100;
    Phase1Model model(Phase1Mode::Runtime, ds.grid, ds.normalizer, h.seed);
    train_phase1(model, ds, h);

    std::vector<HWConfig> hw;
    std::vector<Workload> wl;
    std::vector<double> target;
    for (std::size_t r = 0; r < ds.size(); ++r) {
        hw.push_back(ds.rows[r].hw);
        wl.push_back(ds.rows[r].w);
        target.push_back(row_targets(ds.rows[r], ds.stats_of_row(r), Phase1Mode::Runtime)[0]);
    }
    const Tensor lat = model.encode(hw);
    const auto mse_for = [&](const Tensor& latents) {
        const Tensor p = model.predict(latents, wl);
        double s = 0;
        for (std::size_t i = 0; i < target.size(); ++i) s += std::pow(p(i, 0) - target[i], 2);
        return s / static_cast<double>(target.size());
    };
    std::vector<std::size_t> perm(lat.rows());
    std::iota(perm.begin(), perm.end(), 0);
    nn::Pcg32 rng(4);
    rng.shuffle(perm.begin(), perm.end());
    const double paired = mse_for(lat);
    const double shuffled = mse_for(lat.gather_rows(perm));
    CHECK(paired * 3.0 < shuffled);
}

TEST_CASE("latent quality report") {
    const Dataset ds = small_dataset();
    const Phase1Model model(Phase1Mode::Runtime, ds.grid, ds.normalizer, 1);
    const auto rows = latent_quality_report(model, ds, 200, 3);
    CHECK(rows.size() == ds.suite.size());
    for (const auto& r : rows) {
        CHECK(r.pairs == 200);
        CHECK(r.roundtrip_fraction >= 0.0);
        CHECK(r.roundtrip_fraction <= 1.0);
    }
    const std::string csv = latent_quality_csv(rows, Provenance{});
    CHECK(csv.rfind("# axegen", 0) == 0);

    const std::vector<double> a = {1, 2, 3, 4, 5};
    const std::vector<double> b = {2, 4, 6, 8, 10};
    const std::vector<double> c = {5, 4, 3, 2, 1};
    const std::vector<double> ties = {1, 1, 2, 2, 3};
    CHECK(spearman(a, b) == doctest::Approx(1.0));
    CHECK(spearman(a, c) == doctest::Approx(-1.0));
    // Average ranks: ties -> (1.5,1.5,3.5,3.5,5); Pearson with 1..5.
    CHECK(spearman(a, ties) == doctest::Approx(0.9486832980505138));
}

TEST_CASE("phase-1 checkpoint round trip") {
    const Dataset ds = small_dataset();
    const Phase1Model model(Phase1Mode::PowerPerf, ds.grid, ds.normalizer, 12);
    const auto dir = std::filesystem::temp_directory_path() / "axegen_test_p1";
    std::filesystem::remove_all(dir);
    model.save(dir, {{"note", "x"}});
    const Phase1Model back = Phase1Model::load(dir);
    CHECK(back.mode() == Phase1Mode::PowerPerf);
    CHECK(back.grid().cardinality() == ds.grid.cardinality());
    CHECK(nn::parameter_checksum(back.parameters()) == nn::parameter_checksum(model.parameters()));
    const auto configs = ds.grid.enumerate();
    const Tensor a = model.encode(configs);
    const Tensor b = back.encode(configs);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
    std::filesystem::remove_all(dir);
}
