// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <set>

#include "axegen/diffusion.hpp"
#include "axegen/error.hpp"
#include "axegen/nn/checkpoint.hpp"
#include "axegen/nn/kernels.hpp"
#include "axegen/nn/layers.hpp"
#include "axegen/nn/loss.hpp"
#include "axegen/nn/optim.hpp"
#include "axegen/nn/rng.hpp"
#include "gradcheck.hpp"

using namespace axe;
using namespace axe::nn;
using gradcheck::random_tensor;

namespace {

constexpr double kGradTol = 1e-3;
// Whole-network checks stack ~20 float layers; central differences in float
// then carry O(1e-3) rounding noise on the smallest-gradient tensors.
constexpr double kCompositeTol = 2e-2;

double check_layer(Layer& layer, Tensor x, Pcg32& rng, const std::function<void()>& prepare = {}) {
    const auto rep = gradcheck::layer_check(layer, std::move(x), rng, prepare);
    INFO("worst tensor: " << rep.worst_name);
    return rep.worst;
}

using gradcheck::off_kink;

}  // namespace

TEST_CASE("Linear forward and gradients") {
    Pcg32 rng(1);
    Linear lin("lin", 8, 8, rng);
    lin.weight().value.zero();
    for (std::size_t i = 0; i < 8; ++i) lin.weight().value(i, i) = 1.0f;
    lin.bias().value.zero();
    const Tensor x = random_tensor(5, 8, rng);
    const Tensor y = lin.apply(x);
    CHECK(std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0);

    Linear fresh("lin", 8, 8, rng);
    CHECK(check_layer(fresh, random_tensor(8, 8, rng), rng) <= kGradTol);
    Linear wide("wide", 5, 11, rng);
    CHECK(check_layer(wide, random_tensor(7, 5, rng), rng) <= kGradTol);
    CHECK_THROWS_AS(fresh.apply(Tensor(3, 5)), Error);
}

TEST_CASE("ReLU gradients") {
    Pcg32 rng(2);
    ReLU relu;
    CHECK(check_layer(relu, off_kink(8, 8, rng), rng) <= kGradTol);
}

TEST_CASE("LayerNorm gradients") {
    Pcg32 rng(3);
    LayerNorm ln("ln", 8);
    std::vector<Parameter*> ps;
    ln.collect(ps);
    for (auto* p : ps) {
        for (auto& v : p->value.span()) v += static_cast<float>(0.3 * rng.normal());
    }
    CHECK(check_layer(ln, random_tensor(8, 8, rng, 2.0), rng) <= kGradTol);

    // Rows come out with zero mean and unit variance before the affine part.
    LayerNorm plain("plain", 16);
    const Tensor y = plain.apply(random_tensor(4, 16, rng, 5.0));
    for (std::size_t i = 0; i < 4; ++i) {
        double m = 0, v = 0;
        for (const float f : y.row(i)) m += f;
        m /= 16;
        for (const float f : y.row(i)) v += (f - m) * (f - m);
        CHECK(std::abs(m) < 1e-5);
        CHECK(v / 16 == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("Dropout") {
    Pcg32 rng(4);
    Dropout keep(0.0f, 9);
    const Tensor x = random_tensor(6, 8, rng);
    const Tensor y_train = keep.forward(x, true);
    const Tensor y_eval = keep.forward(x, false);
    CHECK(std::memcmp(x.data(), y_train.data(), x.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(x.data(), y_eval.data(), x.size() * sizeof(float)) == 0);

    Dropout drop(0.3f, 9);
    CHECK(check_layer(drop, random_tensor(8, 8, rng), rng, [&] { drop.reseed(77); }) <= kGradTol);

    // Inverted scaling keeps the mean.
    Dropout big(0.5f, 3);
    const Tensor ones(200, 100, 1.0f);
    const Tensor d = big.forward(ones, true);
    double s = 0;
    std::size_t zeros = 0;
    for (const float v : d.span()) {
        s += v;
        zeros += v == 0.0f;
        CHECK((v == 0.0f || v == 2.0f));
    }
    CHECK(s / d.size() == doctest::Approx(1.0).epsilon(0.03));
    CHECK(static_cast<double>(zeros) / d.size() == doctest::Approx(0.5).epsilon(0.03));
    const Tensor e = big.forward(ones, false);
    CHECK(std::memcmp(ones.data(), e.data(), ones.size() * sizeof(float)) == 0);
}

TEST_CASE("Sequential MLP gradients") {
    Pcg32 rng(5);
    Sequential mlp = make_mlp("mlp", {6, 8, 8, 3}, rng);
    CHECK(mlp.size() == 5);
    CHECK(check_layer(mlp, random_tensor(8, 6, rng), rng) <= kGradTol);
}

TEST_CASE("Embedding gradients") {
    Pcg32 rng(6);
    Embedding emb("emb", 5, 8, rng);
    const std::vector<int> ids = {0, 3, 3, 1, 4, 0, 2, 3};
    const Tensor g = random_tensor(ids.size(), 8, rng);
    emb.table().grad.zero();
    emb.backward(ids, g);
    const auto rep = gradcheck::check({gradcheck::param_target(emb.table())},
                                      [&] { return gradcheck::dot(emb.apply(ids), g); });
    CHECK(rep.worst <= kGradTol);
    const Tensor looked = emb.apply(std::vector<int>{4});
    CHECK(std::memcmp(looked.data(), emb.table().value.row(4).data(), 8 * sizeof(float)) == 0);
    CHECK_THROWS_AS(emb.apply(std::vector<int>{5}), Error);
}

TEST_CASE("loss gradients") {
    Pcg32 rng(7);
    Tensor pred = random_tensor(8, 8, rng);
    const Tensor target = random_tensor(8, 8, rng);
    const auto r = mse_loss(pred, target);
    double expect = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - target.data()[i];
        expect += d * d;
    }
    CHECK(r.loss == doctest::Approx(expect / 64).epsilon(1e-6));
    auto rep = gradcheck::check({gradcheck::input_target("pred", pred, r.grad)},
                                [&] { return mse_loss(pred, target).loss; });
    CHECK(rep.worst <= kGradTol);
    CHECK_THROWS_AS(mse_loss(pred, Tensor(8, 7)), Error);

    Tensor logits = random_tensor(8, 6, rng);
    const std::vector<int> labels = {0, 5, 2, 2, 1, 3, 4, 0};
    const auto ce = cross_entropy_loss(logits, labels);
    double ce_expect = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        double z = 0;
        for (const float v : logits.row(i)) z += std::exp(static_cast<double>(v));
        ce_expect -= logits(i, static_cast<std::size_t>(labels[i])) - std::log(z);
    }
    CHECK(ce.loss == doctest::Approx(ce_expect / 8).epsilon(1e-6));
    rep = gradcheck::check({gradcheck::input_target("logits", logits, ce.grad)},
                           [&] { return cross_entropy_loss(logits, labels).loss; });
    CHECK(rep.worst <= kGradTol);
    // Large logits stay finite.
    Tensor huge(1, 3);
    huge(0, 0) = 1e4f;
    CHECK(std::isfinite(cross_entropy_loss(huge, std::vector<int>{1}).loss));
    CHECK(argmax_rows(Tensor(2, 3, 0.5f)) == std::vector<int>{0, 0});
}

TEST_CASE("denoiser gradients") {
    DenoiserShape s;
    s.latent = 6;
    s.time_embed = 8;
    s.cond_hidden = 4;
    s.hidden = 8;
    s.down1 = 10;
    s.down2 = 8;
    s.down3 = 6;
    s.cond_p = 2;
    s.dropout = 0.0f;
    Denoiser net(s, 5);
    Pcg32 rng(8);
    Tensor v = random_tensor(4, s.latent, rng);
    Tensor cp = random_tensor(4, s.cond_p, rng);
    Tensor cw = random_tensor(4, 3, rng);
    const std::vector<std::int64_t> ts = {1, 17, 300, 999};
    const Tensor y0 = net.forward(v, ts, cp, cw, true);
    const Tensor g = random_tensor(y0.rows(), y0.cols(), rng);
    auto params = net.parameters();
    zero_grad(params);
    net.backward(g);
    std::vector<gradcheck::Target> targets;
    for (auto* p : params) targets.push_back(gradcheck::param_target(*p));
    const auto rep = gradcheck::check(
        targets, [&] { return gradcheck::dot(net.forward(v, ts, cp, cw, true), g); }, 1e-3, 64);
    INFO("worst tensor: " << rep.worst_name);
    CHECK(rep.worst <= kCompositeTol);

    // Inference path equals the training path when dropout is off.
    const Tensor a = net.apply(v, ts, cp, cw);
    CHECK(std::memcmp(a.data(), y0.data(), a.size() * sizeof(float)) == 0);
}

TEST_CASE("AdamW") {
    Parameter p("p", 1, 3);
    p.value(0, 0) = 1.0f;
    p.value(0, 1) = -2.0f;
    p.value(0, 2) = 0.5f;
    const Tensor before = p.value;
    AdamW still({&p}, {.lr = 0.1, .weight_decay = 0.0});
    still.zero_grad();
    still.step();
    CHECK(std::memcmp(before.data(), p.value.data(), 3 * sizeof(float)) == 0);

    // Decoupled decay: with zero gradient only the decay term moves p.
    AdamW decay({&p}, {.lr = 0.1, .weight_decay = 0.5});
    decay.zero_grad();
    decay.step();
    CHECK(p.value(0, 0) == doctest::Approx(1.0 * (1 - 0.05)).epsilon(1e-6));
    CHECK(p.value(0, 1) == doctest::Approx(-2.0 * (1 - 0.05)).epsilon(1e-6));

    // f(x) = x^2 from x = 1: first bias-corrected step moves by lr.
    Parameter x("x", 1, 1);
    x.value(0, 0) = 1.0f;
    AdamW opt({&x}, {.lr = 0.1, .weight_decay = 0.0});
    opt.zero_grad();
    x.grad(0, 0) = 2.0f * x.value(0, 0);
    opt.step();
    CHECK(std::abs(x.value(0, 0)) < 1.0f);
    CHECK(x.value(0, 0) == doctest::Approx(0.9).epsilon(1e-5));
    CHECK(opt.steps() == 1);
}

TEST_CASE("MLP learns XOR") {
    Pcg32 rng(42);
    Sequential mlp = make_mlp("xor", {2, 16, 1}, rng);
    std::vector<Parameter*> params;
    mlp.collect(params);
    AdamW opt(params, {.lr = 0.01, .weight_decay = 0.0});
    const Tensor x(4, 2, {0, 0, 0, 1, 1, 0, 1, 1});
    const Tensor y(4, 1, {0, 1, 1, 0});
    double loss = 1.0;
    int step = 0;
    for (; step < 2000 && loss >= 0.01; ++step) {
        opt.zero_grad();
        const auto r = mse_loss(mlp.forward(x, true), y);
        loss = r.loss;
        mlp.backward(r.grad);
        opt.step();
    }
    INFO("steps: " << step);
    CHECK(loss < 0.01);
}

TEST_CASE("plateau scheduler") {
    PlateauScheduler s(2, 0.1);
    double lr = 1.0;
    lr = s.observe(1.0, lr);
    CHECK(lr == 1.0);
    lr = s.observe(0.9, lr);
    CHECK(lr == 1.0);
    lr = s.observe(0.95, lr);  // 1 bad epoch
    CHECK(lr == 1.0);
    lr = s.observe(0.9, lr);  // equal is not an improvement: 2 bad epochs
    CHECK(lr == doctest::Approx(0.1));
    CHECK(s.reductions() == 1);
    CHECK(s.bad_epochs() == 0);
    lr = s.observe(0.91, lr);
    CHECK(lr == doctest::Approx(0.1));
    lr = s.observe(0.5, lr);
    CHECK(lr == doctest::Approx(0.1));
    CHECK(s.best() == 0.5);

    // Property: lr never increases; it drops exactly after `patience` misses.
    Pcg32 rng(3);
    PlateauScheduler p(3, 0.5);
    double cur = 1.0, best = INFINITY;
    int misses = 0;
    for (int e = 0; e < 500; ++e) {
        const double m = rng.uniform();
        const double next = p.observe(m, cur);
        if (m < best) {
            best = m;
            misses = 0;
            CHECK(next == cur);
        } else if (++misses == 3) {
            misses = 0;
            CHECK(next == doctest::Approx(cur * 0.5));
        } else {
            CHECK(next == cur);
        }
        CHECK(next <= cur);
        cur = next;
    }
    CHECK_THROWS_AS(PlateauScheduler(2, 1.0), ConfigError);
    CHECK_THROWS_AS(PlateauScheduler(-1, 0.5), ConfigError);
}

TEST_CASE("seeded generator") {
    Pcg32 a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u32() == b.next_u32());
    // Reference values for the PCG32 XSH-RR family with seed 42, stream 54.
    Pcg32 ref(42, 54);
    CHECK(ref.next_u32() == 0xa15c02b7u);
    CHECK(ref.next_u32() == 0x7b47f409u);
    CHECK(ref.next_u32() == 0xba1d3330u);

    Pcg32 r(2026);
    const int n = 100000;
    double s = 0, s2 = 0;
    bool in_range = true;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        s += z;
        s2 += z * z;
        const double u = r.uniform();
        in_range = in_range && u >= 0.0 && u < 1.0;
    }
    const double mean = s / n;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(s2 / n - mean * mean - 1.0) < 0.05);
    CHECK(in_range);
    for (int i = 0; i < 1000; ++i) CHECK(r.below(7) < 7);
    CHECK(Pcg32::derive(5, 1).next_u64() != Pcg32::derive(5, 2).next_u64());
    CHECK(Pcg32::derive(5, 1).next_u64() == Pcg32::derive(5, 1).next_u64());
}

TEST_CASE("sinusoidal embedding") {
    const auto e0 = sinusoidal_embedding(0, 128);
    REQUIRE(e0.size() == 128);
    for (std::size_t i = 0; i < 128; i += 2) {
        CHECK(e0[i] == 0.0f);
        CHECK(e0[i + 1] == 1.0f);
    }
    std::set<std::vector<float>> seen;
    bool bounded = true;
    for (std::int64_t t = 1; t <= 1000; ++t) {
        const auto e = sinusoidal_embedding(t, 128);
        for (const float v : e) bounded = bounded && v >= -1.0f && v <= 1.0f;
        seen.insert(e);
    }
    CHECK(seen.size() == 1000);
    CHECK(bounded);
    // Component 2 of t = 1 uses frequency 10000^(-1/64).
    const auto e1 = sinusoidal_embedding(1, 128);
    CHECK(e1[2] == doctest::Approx(std::sin(std::pow(10000.0, -1.0 / 64.0))).epsilon(1e-6));
    const std::vector<std::int64_t> ts = {3, 9};
    const Tensor batch = sinusoidal_embedding(ts, 128);
    CHECK(std::vector<float>(batch.row(1).begin(), batch.row(1).end()) == sinusoidal_embedding(9, 128));
}

TEST_CASE("parallel GEMM kernels match the serial reference bit for bit") {
    Pcg32 rng(99);
    const std::size_t shapes[][3] = {{1, 1, 1}, {7, 13, 5}, {64, 64, 64}, {129, 257, 67}, {512, 40, 300}};
    for (const auto& s : shapes) {
        const std::size_t m = s[0], n = s[1], k = s[2];
        const Tensor a = random_tensor(m, k, rng);
        const Tensor b = random_tensor(k, n, rng);
        const Tensor bt = random_tensor(n, k, rng);
        const Tensor at = random_tensor(k, m, rng);
        for (const bool acc : {false, true}) {
            Tensor c1 = random_tensor(m, n, rng);
            Tensor c2 = c1;
            kernels::gemm(m, n, k, a.data(), b.data(), c1.data(), acc);
            kernels::reference::gemm(m, n, k, a.data(), b.data(), c2.data(), acc);
            CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(float)) == 0);
            kernels::gemm_nt(m, n, k, a.data(), bt.data(), c1.data(), acc);
            kernels::reference::gemm_nt(m, n, k, a.data(), bt.data(), c2.data(), acc);
            CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(float)) == 0);
            kernels::gemm_tn(m, n, k, at.data(), b.data(), c1.data(), acc);
            kernels::reference::gemm_tn(m, n, k, at.data(), b.data(), c2.data(), acc);
            CHECK(std::memcmp(c1.data(), c2.data(), c1.size() * sizeof(float)) == 0);
        }
        // And the reference agrees with a plain double-precision product.
        Tensor c(m, n);
        kernels::reference::gemm(m, n, k, a.data(), b.data(), c.data(), false);
        double worst = 0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double d = 0;
                for (std::size_t p = 0; p < k; ++p) d += static_cast<double>(a(i, p)) * b(p, j);
                worst = std::max(worst, std::abs(d - c(i, j)) / (1.0 + std::abs(d)));
            }
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("checkpoint round trip and determinism") {
    Pcg32 r1(10), r2(10);
    Sequential a = make_mlp("net", {4, 8, 2}, r1);
    Sequential b = make_mlp("net", {4, 8, 2}, r2);
    std::vector<Parameter*> pa, pb;
    a.collect(pa);
    b.collect(pb);
    std::vector<const Parameter*> ca(pa.begin(), pa.end()), cb(pb.begin(), pb.end());
    CHECK(parameter_checksum(ca) == parameter_checksum(cb));
    CHECK(parameter_count(ca) == 4 * 8 + 8 + 8 * 2 + 2);

    // Two identical training runs end with identical parameters.
    const auto train = [](Sequential& net, std::vector<Parameter*>& ps) {
        AdamW opt(ps, {.lr = 0.01});
        Pcg32 data(3);
        for (int i = 0; i < 50; ++i) {
            const Tensor x = random_tensor(16, 4, data);
            const Tensor y = random_tensor(16, 2, data);
            opt.zero_grad();
            const auto r = mse_loss(net.forward(x, true), y);
            net.backward(r.grad);
            opt.step();
        }
    };
    train(a, pa);
    train(b, pb);
    CHECK(parameter_checksum(ca) == parameter_checksum(cb));

    const auto dir = std::filesystem::temp_directory_path() / "axegen_test_ckpt";
    std::filesystem::remove_all(dir);
    save_checkpoint(dir, {{"architecture", "test"}}, ca);
    Pcg32 r3(11);
    Sequential c = make_mlp("net", {4, 8, 2}, r3);
    std::vector<Parameter*> pc;
    c.collect(pc);
    const auto manifest = load_checkpoint(dir, pc);
    CHECK(manifest.at("architecture") == "test");
    std::vector<const Parameter*> cc(pc.begin(), pc.end());
    CHECK(parameter_checksum(cc) == parameter_checksum(ca));

    Pcg32 r4(11);
    Sequential wrong = make_mlp("net", {4, 9, 2}, r4);
    std::vector<Parameter*> pw;
    wrong.collect(pw);
    CHECK_THROWS_AS(load_checkpoint(dir, pw), Error);
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(load_checkpoint(dir, pc), MissingArtifact);
}
