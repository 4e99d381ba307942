// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "axegen/error.hpp"
#include "axegen/nn/loss.hpp"
#include "axegen/nn/optim.hpp"
#include "axegen/nn/rng.hpp"

namespace axe {

using nn::Tensor;

// ---- schedule --------------------------------------------------------------

NoiseSchedule NoiseSchedule::linear(int steps, double beta_1, double beta_T) {
    if (steps < 1) {
        throw ConfigError("diffusion needs at least one step");
    }
    if (!(beta_1 > 0.0 && beta_T < 1.0 && (steps == 1 ? beta_1 <= beta_T : beta_1 < beta_T))) {
        throw ConfigError("noise schedule requires 0 < beta_1 < beta_T < 1");
    }
    NoiseSchedule s;
    s.beta_1_ = beta_1;
    s.beta_T_ = beta_T;
    s.beta_.resize(static_cast<std::size_t>(steps));
    s.alpha_.resize(s.beta_.size());
    s.alpha_bar_.resize(s.beta_.size());
    // Cumulative product accumulated in log space.
    double log_abar = 0.0;
    for (int t = 1; t <= steps; ++t) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
        const double b = beta_1 + frac * (beta_T - beta_1);
        const auto i = static_cast<std::size_t>(t - 1);
        s.beta_[i] = b;
        s.alpha_[i] = 1.0 - b;
        log_abar += std::log1p(-b);
        s.alpha_bar_[i] = std::exp(log_abar);
    }
    return s;
}

nlohmann::json NoiseSchedule::to_json() const {
    return {{"kind", "linear"}, {"steps", steps()}, {"beta_1", beta_1_}, {"beta_T", beta_T_}};
}

NoiseSchedule NoiseSchedule::from_json(const nlohmann::json& doc) {
    return linear(doc.at("steps").get<int>(), doc.at("beta_1").get<double>(),
                  doc.at("beta_T").get<double>());
}

void forward_noise(std::span<const float> v0, int t, std::span<const float> eps,
                   const NoiseSchedule& schedule, std::span<float> out) {
    if (v0.size() != eps.size() || v0.size() != out.size()) {
        throw Error("forward_noise: mismatched lengths " + std::to_string(v0.size()) + ", " +
                    std::to_string(eps.size()) + ", " + std::to_string(out.size()));
    }
    if (t < 1 || t > schedule.steps()) {
        throw Error("forward_noise: t=" + std::to_string(t) + " outside [1, " +
                    std::to_string(schedule.steps()) + "]");
    }
    const double ab = schedule.alpha_bar(t);
    const auto a = static_cast<float>(std::sqrt(ab));
    const auto s = static_cast<float>(std::sqrt(1.0 - ab));
    for (std::size_t i = 0; i < v0.size(); ++i) {
        out[i] = a * v0[i] + s * eps[i];
    }
}

// ---- shapes and profiles ---------------------------------------------------

nlohmann::json DenoiserShape::to_json() const {
    return {{"latent", latent}, {"time_embed", time_embed}, {"cond_hidden", cond_hidden},
            {"hidden", hidden}, {"down1", down1},           {"down2", down2},
            {"down3", down3},   {"cond_p", cond_p},         {"dropout", dropout}};
}

DenoiserShape DenoiserShape::from_json(const nlohmann::json& doc) {
    DenoiserShape s;
    s.latent = doc.at("latent").get<std::size_t>();
    s.time_embed = doc.at("time_embed").get<std::size_t>();
    s.cond_hidden = doc.at("cond_hidden").get<std::size_t>();
    s.hidden = doc.at("hidden").get<std::size_t>();
    s.down1 = doc.at("down1").get<std::size_t>();
    s.down2 = doc.at("down2").get<std::size_t>();
    s.down3 = doc.at("down3").get<std::size_t>();
    s.cond_p = doc.at("cond_p").get<std::size_t>();
    s.dropout = doc.at("dropout").get<float>();
    return s;
}

std::string_view to_string(DiffusionProfile p) {
    return p == DiffusionProfile::Paper ? "paper" : "desk";
}

DiffusionProfile parse_profile(std::string_view text) {
    if (text == "paper") return DiffusionProfile::Paper;
    if (text == "desk") return DiffusionProfile::Desk;
    throw ConfigError("unknown profile '" + std::string(text) + "' (expected paper or desk)");
}

DiffusionSettings profile_settings(DiffusionProfile p, std::size_t cond_p_width) {
    DiffusionSettings s;
    s.shape.cond_p = cond_p_width;
    if (p == DiffusionProfile::Desk) {
        s.shape.cond_hidden = 32;
        s.shape.hidden = 256;
        s.shape.down1 = 512;
        s.shape.down2 = 256;
        s.shape.down3 = 128;
        // With a few hundred thousand rows the half-width model underfits;
        // dropout only slows it down.
        s.shape.dropout = 0.0f;
        s.steps = 200;
        const double scale = 1000.0 / s.steps;
        s.beta_1 *= scale;
        s.beta_T *= scale;
    }
    return s;
}

// ---- Denoiser ---------------------------------------------------------------

namespace {

nn::Sequential down_block(const std::string& name, std::size_t in, std::size_t out, float dropout,
                          std::uint64_t dropout_seed, nn::Pcg32& rng) {
    nn::Sequential s;
    s.add<nn::Linear>(name + ".linear", in, out, rng);
    s.add<nn::LayerNorm>(name + ".norm", out);
    s.add<nn::ReLU>();
    s.add<nn::Dropout>(dropout, dropout_seed);
    return s;
}

nn::Sequential relu_block(const std::string& name, std::size_t in, std::size_t out, nn::Pcg32& rng) {
    nn::Sequential s;
    s.add<nn::Linear>(name, in, out, rng);
    s.add<nn::ReLU>();
    return s;
}

nn::Sequential cond_mlp(const std::string& name, std::size_t in, std::size_t hidden, nn::Pcg32& rng) {
    return nn::make_mlp(name, {in, hidden, hidden}, rng);
}

void require_batch(const Tensor& x, std::size_t rows, std::size_t cols, const char* what) {
    if (x.rows() != rows || x.cols() != cols) {
        throw Error(std::string(what) + ": expected [" + std::to_string(rows) + "x" +
                    std::to_string(cols) + "], got " + x.shape_string());
    }
}

void add_into(Tensor& dst, const Tensor& src) {
    require_same_shape(dst, src, "gradient sum");
    float* d = dst.data();
    const float* s = src.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        d[i] += s[i];
    }
}

}  // namespace

Denoiser::Denoiser(const DenoiserShape& s, std::uint64_t seed)
    : shape_(s),
      time_proj_([&] {
          auto rng = nn::Pcg32::derive(seed, 1);
          return nn::Linear("sp.time", s.time_embed, s.hidden, rng);
      }()),
      p_mlp_([&] {
          auto rng = nn::Pcg32::derive(seed, 2);
          return cond_mlp("sp.p", s.cond_p, s.cond_hidden, rng);
      }()),
      w_mlp_([&] {
          auto rng = nn::Pcg32::derive(seed, 3);
          return cond_mlp("sp.w", 3, s.cond_hidden, rng);
      }()),
      cond_proj_([&] {
          auto rng = nn::Pcg32::derive(seed, 4);
          return nn::Linear("sp.cond", 2 * s.cond_hidden, s.hidden, rng);
      }()),
      in_proj_([&] {
          auto rng = nn::Pcg32::derive(seed, 5);
          return nn::Linear("sp.input", s.latent, s.hidden, rng);
      }()),
      down1_([&] {
          auto rng = nn::Pcg32::derive(seed, 6);
          return down_block("unet.down1", 3 * s.hidden, s.down1, s.dropout, seed ^ 0xd1, rng);
      }()),
      down2_([&] {
          auto rng = nn::Pcg32::derive(seed, 7);
          return down_block("unet.down2", s.down1, s.down2, s.dropout, seed ^ 0xd2, rng);
      }()),
      down3_([&] {
          auto rng = nn::Pcg32::derive(seed, 8);
          return down_block("unet.down3", s.down2, s.down3, s.dropout, seed ^ 0xd3, rng);
      }()),
      mid_([&] {
          auto rng = nn::Pcg32::derive(seed, 9);
          return relu_block("unet.mid", s.down3, s.down3, rng);
      }()),
      up1_([&] {
          auto rng = nn::Pcg32::derive(seed, 10);
          return relu_block("unet.up1", 2 * s.down3, s.down2, rng);
      }()),
      up2_([&] {
          auto rng = nn::Pcg32::derive(seed, 11);
          return relu_block("unet.up2", 2 * s.down2, s.down2, rng);
      }()),
      head_([&] {
          auto rng = nn::Pcg32::derive(seed, 12);
          return nn::Linear("unet.head", s.down2, s.latent, rng);
      }()) {}

Tensor Denoiser::apply(const Tensor& v_t, std::span<const std::int64_t> t, const Tensor& cond_p,
                       const Tensor& cond_w) const {
    const std::size_t b = v_t.rows();
    require_batch(v_t, b, shape_.latent, "denoiser input");
    require_batch(cond_p, b, shape_.cond_p, "denoiser cond_p");
    require_batch(cond_w, b, 3, "denoiser cond_w");
    AXE_CHECK(t.size() == b, "denoiser: one timestep per row required");

    const Tensor te = time_proj_.apply(nn::sinusoidal_embedding(t, shape_.time_embed));
    const Tensor pc = p_mlp_.apply(cond_p);
    const Tensor wc = w_mlp_.apply(cond_w);
    const Tensor c = cond_proj_.apply(Tensor::hcat({&pc, &wc}));
    const Tensor xi = in_proj_.apply(v_t);
    const Tensor d1 = down1_.apply(Tensor::hcat({&xi, &te, &c}));
    const Tensor d2 = down2_.apply(d1);
    const Tensor d3 = down3_.apply(d2);
    const Tensor m = mid_.apply(d3);
    const Tensor u1 = up1_.apply(Tensor::hcat({&m, &d3}));
    const Tensor u2 = up2_.apply(Tensor::hcat({&u1, &d2}));
    return head_.apply(u2);
}

Tensor Denoiser::forward(const Tensor& v_t, std::span<const std::int64_t> t, const Tensor& cond_p,
                         const Tensor& cond_w, bool train) {
    if (!train) {
        return apply(v_t, t, cond_p, cond_w);
    }
    const std::size_t b = v_t.rows();
    require_batch(v_t, b, shape_.latent, "denoiser input");
    require_batch(cond_p, b, shape_.cond_p, "denoiser cond_p");
    require_batch(cond_w, b, 3, "denoiser cond_w");
    AXE_CHECK(t.size() == b, "denoiser: one timestep per row required");

    const Tensor te = time_proj_.forward(nn::sinusoidal_embedding(t, shape_.time_embed), true);
    const Tensor pc = p_mlp_.forward(cond_p, true);
    const Tensor wc = w_mlp_.forward(cond_w, true);
    const Tensor c = cond_proj_.forward(Tensor::hcat({&pc, &wc}), true);
    const Tensor xi = in_proj_.forward(v_t, true);
    const Tensor d1 = down1_.forward(Tensor::hcat({&xi, &te, &c}), true);
    const Tensor d2 = down2_.forward(d1, true);
    const Tensor d3 = down3_.forward(d2, true);
    const Tensor m = mid_.forward(d3, true);
    const Tensor u1 = up1_.forward(Tensor::hcat({&m, &d3}), true);
    const Tensor u2 = up2_.forward(Tensor::hcat({&u1, &d2}), true);
    return head_.forward(u2, true);
}

void Denoiser::backward(const Tensor& grad_out) {
    const auto& s = shape_;
    const Tensor du2 = head_.backward(grad_out);
    const Tensor dcat2 = up2_.backward(du2);
    const Tensor du1 = dcat2.columns(0, s.down2);
    Tensor dd2 = dcat2.columns(s.down2, 2 * s.down2);
    const Tensor dcat1 = up1_.backward(du1);
    Tensor dd3 = mid_.backward(dcat1.columns(0, s.down3));
    add_into(dd3, dcat1.columns(s.down3, 2 * s.down3));
    add_into(dd2, down3_.backward(dd3));
    const Tensor dd1 = down2_.backward(dd2);
    const Tensor dh = down1_.backward(dd1);
    in_proj_.backward(dh.columns(0, s.hidden));
    time_proj_.backward(dh.columns(s.hidden, 2 * s.hidden));
    const Tensor dc = cond_proj_.backward(dh.columns(2 * s.hidden, 3 * s.hidden));
    p_mlp_.backward(dc.columns(0, s.cond_hidden));
    w_mlp_.backward(dc.columns(s.cond_hidden, 2 * s.cond_hidden));
}

template <typename Self, typename Fn>
void Denoiser::visit(Self& self, Fn&& fn) {
    fn(self.time_proj_);
    fn(self.p_mlp_);
    fn(self.w_mlp_);
    fn(self.cond_proj_);
    fn(self.in_proj_);
    fn(self.down1_);
    fn(self.down2_);
    fn(self.down3_);
    fn(self.mid_);
    fn(self.up1_);
    fn(self.up2_);
    fn(self.head_);
}

std::vector<nn::Parameter*> Denoiser::parameters() {
    std::vector<nn::Parameter*> out;
    visit(*this, [&](nn::Layer& l) { l.collect(out); });
    return out;
}

std::vector<const nn::Parameter*> Denoiser::parameters() const {
    std::vector<const nn::Parameter*> out;
    visit(*this, [&](const nn::Layer& l) { l.collect(out); });
    return out;
}

std::size_t Denoiser::parameter_count() const {
    return nn::parameter_count(parameters());
}

// ---- training ---------------------------------------------------------------

nlohmann::json Phase2Hyper::to_json() const {
    return {{"epochs", epochs},     {"batch_size", batch_size},         {"lr", lr},
            {"weight_decay", weight_decay}, {"patience", patience}, {"plateau_factor", plateau_factor},
            {"val_fraction", val_fraction}, {"seed", seed}};
}

Phase2Hyper Phase2Hyper::from_json(const nlohmann::json& doc) {
    Phase2Hyper h;
    h.epochs = doc.value("epochs", h.epochs);
    h.batch_size = doc.value("batch_size", h.batch_size);
    h.lr = doc.value("lr", h.lr);
    h.weight_decay = doc.value("weight_decay", h.weight_decay);
    h.patience = doc.value("patience", h.patience);
    h.plateau_factor = doc.value("plateau_factor", h.plateau_factor);
    h.val_fraction = doc.value("val_fraction", h.val_fraction);
    h.seed = doc.value("seed", h.seed);
    if (h.epochs < 1 || h.batch_size < 1 || !(h.lr > 0.0)) {
        throw ConfigError("phase-2 hyperparameters need epochs >= 1, batch_size >= 1, lr > 0");
    }
    return h;
}

namespace {

struct NoisyBatch {
    Tensor v_t;
    Tensor eps;
    std::vector<std::int64_t> t;
    Tensor cond_p;
    Tensor cond_w;
};

NoisyBatch make_noisy_batch(const NoiseSchedule& schedule, const Phase2Data& data,
                            std::span<const std::size_t> rows, nn::Pcg32& rng) {
    const std::size_t b = rows.size();
    const std::size_t d = data.latents.cols();
    NoisyBatch nb{Tensor(b, d), Tensor(b, d), std::vector<std::int64_t>(b),
                  data.cond_p.gather_rows(rows), data.cond_w.gather_rows(rows)};
    for (std::size_t i = 0; i < b; ++i) {
        const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(schedule.steps())));
        nb.t[i] = t;
        auto e = nb.eps.row(i);
        for (auto& x : e) {
            x = static_cast<float>(rng.normal());
        }
        forward_noise(data.latents.row(rows[i]), t, e, schedule, nb.v_t.row(i));
    }
    return nb;
}

void check_data(const Denoiser& model, const Phase2Data& data) {
    const std::size_t n = data.latents.rows();
    if (data.latents.cols() != model.shape().latent || data.cond_p.rows() != n ||
        data.cond_p.cols() != model.shape().cond_p || data.cond_w.rows() != n ||
        data.cond_w.cols() != 3) {
        throw Error("phase-2 data shapes " + data.latents.shape_string() + ", " +
                    data.cond_p.shape_string() + ", " + data.cond_w.shape_string() +
                    " do not fit the denoiser");
    }
}

}  // namespace

double noise_prediction_loss(const Denoiser& model, const NoiseSchedule& schedule,
                             const Phase2Data& data, std::span<const std::size_t> rows,
                             std::uint64_t seed, NoiseAblation ablation) {
    check_data(model, data);
    if (rows.empty()) {
        return 0.0;
    }
    constexpr std::size_t kChunk = 1024;
    const std::size_t n_chunks = (rows.size() + kChunk - 1) / kChunk;
    std::vector<double> sums(n_chunks, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(n_chunks); ++ci) {
        const auto c = static_cast<std::size_t>(ci);
        const std::size_t begin = c * kChunk;
        const std::size_t end = std::min(rows.size(), begin + kChunk);
        auto rng = nn::Pcg32::derive(seed, c);
        NoisyBatch nb = make_noisy_batch(schedule, data, rows.subspan(begin, end - begin), rng);
        Tensor pred;
        if (ablation == NoiseAblation::ZeroPrediction) {
            pred = Tensor(nb.eps.rows(), nb.eps.cols());
        } else {
            if (ablation == NoiseAblation::ZeroCondition) {
                nb.cond_p.zero();
                nb.cond_w.zero();
            }
            pred = model.apply(nb.v_t, nb.t, nb.cond_p, nb.cond_w);
        }
        sums[c] = nn::mse_loss(pred, nb.eps).loss * static_cast<double>(end - begin);
    }
    return std::accumulate(sums.begin(), sums.end(), 0.0) / static_cast<double>(rows.size());
}

Phase2TrainResult train_phase2(Denoiser& model, const NoiseSchedule& schedule,
                               const Phase2Data& data, const Phase2Hyper& hyper,
                               const Phase2Callback& on_epoch) {
    check_data(model, data);
    const std::size_t n = data.latents.rows();
    if (n < 2) {
        throw ConfigError("phase-2 training needs at least two samples");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    auto split_rng = nn::Pcg32::derive(hyper.seed, 0x5917);
    split_rng.shuffle(perm.begin(), perm.end());
    const auto n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(hyper.val_fraction * static_cast<double>(n))), 1, n - 1);
    Phase2TrainResult result;
    result.val_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::sort(result.val_rows.begin(), result.val_rows.end());
    std::vector<std::size_t> order(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
    std::sort(order.begin(), order.end());

    auto params = model.parameters();
    nn::AdamW opt(params, {hyper.lr, 0.9, 0.999, 1e-8, hyper.weight_decay});
    nn::PlateauScheduler sched(hyper.patience, hyper.plateau_factor);

    for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
        auto rng = nn::Pcg32::derive(hyper.seed, 0x20000 + static_cast<std::uint64_t>(epoch));
        rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += hyper.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + hyper.batch_size);
            const NoisyBatch nb =
                make_noisy_batch(schedule, data, std::span(order).subspan(start, end - start), rng);
            opt.zero_grad();
            const Tensor pred = model.forward(nb.v_t, nb.t, nb.cond_p, nb.cond_w, true);
            const auto l = nn::mse_loss(pred, nb.eps);
            if (!std::isfinite(l.loss)) {
                throw NumericalError("phase-2 loss is not finite at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(batch_index) +
                                     " (lr=" + std::to_string(opt.lr()) + ")");
            }
            model.backward(l.grad);
            opt.step();
            loss_sum += l.loss * static_cast<double>(end - start);
        }
        Phase2EpochMetrics m;
        m.epoch = epoch;
        m.lr = opt.lr();
        m.train_loss = loss_sum / static_cast<double>(order.size());
        m.val_loss = noise_prediction_loss(model, schedule, data, result.val_rows,
                                           hyper.seed ^ 0x7a11u);
        result.history.push_back(m);
        if (on_epoch) {
            on_epoch(m);
        }
        opt.set_lr(sched.observe(m.val_loss, opt.lr()));
    }
    return result;
}

}  // namespace axe
