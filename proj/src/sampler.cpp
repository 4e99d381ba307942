// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <optional>

#include "axegen/error.hpp"
#include "axegen/nn/rng.hpp"

namespace axe {

using nn::Tensor;

void reverse_step(std::span<const float> v_t, std::span<const float> eps_hat, int t,
                  const NoiseSchedule& schedule, std::span<const float> z, std::span<float> out) {
    AXE_CHECK(v_t.size() == eps_hat.size() && v_t.size() == out.size(), "reverse_step sizes");
    AXE_CHECK(t >= 1 && t <= schedule.steps(), "reverse_step t out of range");
    const double beta = schedule.beta(t);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha(t));
    const double coef = beta / std::sqrt(1.0 - schedule.alpha_bar(t));
    const double sigma = t > 1 ? std::sqrt(beta) : 0.0;
    if (t > 1) {
        AXE_CHECK(z.size() == v_t.size(), "reverse_step needs noise for t > 1");
    }
    for (std::size_t i = 0; i < v_t.size(); ++i) {
        const double mu = inv_sqrt_alpha * (static_cast<double>(v_t[i]) - coef * eps_hat[i]);
        out[i] = static_cast<float>(t > 1 ? mu + sigma * z[i] : mu);
    }
}

void reverse_step_clipped(std::span<const float> v_t, std::span<const float> eps_hat, int t,
                          const NoiseSchedule& schedule, const LatentBounds& bounds,
                          std::span<const float> z, std::span<float> out) {
    AXE_CHECK(v_t.size() == eps_hat.size() && v_t.size() == out.size(), "reverse_step sizes");
    AXE_CHECK(bounds.lo.size() == v_t.size() && bounds.hi.size() == v_t.size(), "latent bounds width");
    AXE_CHECK(t >= 1 && t <= schedule.steps(), "reverse_step t out of range");
    const double beta = schedule.beta(t);
    const double abar = schedule.alpha_bar(t);
    const double abar_prev = t > 1 ? schedule.alpha_bar(t - 1) : 1.0;
    const double sqrt_abar = std::sqrt(abar);
    const double sqrt_one_minus = std::sqrt(1.0 - abar);
    const double c_x0 = std::sqrt(abar_prev) * beta / (1.0 - abar);
    const double c_v = std::sqrt(schedule.alpha(t)) * (1.0 - abar_prev) / (1.0 - abar);
    const double sigma = t > 1 ? std::sqrt(beta) : 0.0;
    if (t > 1) {
        AXE_CHECK(z.size() == v_t.size(), "reverse_step needs noise for t > 1");
    }
    for (std::size_t i = 0; i < v_t.size(); ++i) {
        const double v = v_t[i];
        const double x0 = std::clamp((v - sqrt_one_minus * eps_hat[i]) / sqrt_abar,
                                     static_cast<double>(bounds.lo[i]), static_cast<double>(bounds.hi[i]));
        const double mu = c_x0 * x0 + c_v * v;
        out[i] = static_cast<float>(t > 1 ? mu + sigma * z[i] : mu);
    }
}

namespace {

constexpr std::size_t kSampleChunk = 256;

void sample_chunk(const Denoiser& model, const NoiseSchedule& schedule, const Tensor& cond_p,
                  const Tensor& cond_w, std::uint64_t seed, std::uint64_t first_index,
                  const LatentBounds* bounds, std::size_t begin, std::size_t end, Tensor& out) {
    const std::size_t n = end - begin;
    const std::size_t dim = out.cols();
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i] = begin + i;
    }
    const Tensor cp = cond_p.gather_rows(rows);
    const Tensor cw = cond_w.gather_rows(rows);

    std::vector<nn::Pcg32> rngs;
    rngs.reserve(n);
    Tensor v(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        rngs.push_back(nn::Pcg32::derive(seed, first_index + begin + i));
        for (auto& x : v.row(i)) {
            x = static_cast<float>(rngs[i].normal());
        }
    }
    Tensor next(n, dim);
    std::vector<float> z(dim);
    std::vector<std::int64_t> ts(n);
    for (int t = schedule.steps(); t >= 1; --t) {
        std::fill(ts.begin(), ts.end(), t);
        const Tensor eps = model.apply(v, ts, cp, cw);
        for (std::size_t i = 0; i < n; ++i) {
            if (t > 1) {
                for (auto& x : z) {
                    x = static_cast<float>(rngs[i].normal());
                }
            }
            if (bounds != nullptr) {
                reverse_step_clipped(v.row(i), eps.row(i), t, schedule, *bounds, z, next.row(i));
            } else {
                reverse_step(v.row(i), eps.row(i), t, schedule, z, next.row(i));
            }
        }
        if (!next.all_finite()) {
            throw NumericalError("reverse diffusion produced a non-finite latent at t=" +
                                 std::to_string(t));
        }
        std::swap(v, next);
    }
    std::memcpy(out.data() + begin * dim, v.data(), v.size() * sizeof(float));
}

}  // namespace

Tensor reverse_sample(const Denoiser& model, const NoiseSchedule& schedule, const Tensor& cond_p,
                      const Tensor& cond_w, std::uint64_t seed, std::uint64_t first_index,
                      const LatentBounds* bounds) {
    AXE_CHECK(cond_p.rows() == cond_w.rows(), "condition row counts differ");
    const std::size_t n = cond_p.rows();
    Tensor out(n, model.shape().latent);
    const std::size_t n_chunks = (n + kSampleChunk - 1) / kSampleChunk;
    std::exception_ptr failure;
    std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_chunks); ++c) {
        try {
            const std::size_t begin = static_cast<std::size_t>(c) * kSampleChunk;
            sample_chunk(model, schedule, cond_p, cond_w, seed, first_index, bounds, begin,
                         std::min(n, begin + kSampleChunk), out);
        } catch (...) {
            const std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) {
                failure = std::current_exception();
            }
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

Tensor sample_latents(const Phase2Model& model, const Tensor& cond_p, const Tensor& cond_w,
                      std::uint64_t seed, std::uint64_t first_index) {
    const LatentBounds bounds{model.latent_lo().span(), model.latent_hi().span()};
    Tensor v = reverse_sample(model.denoiser(), model.schedule(), cond_p, cond_w, seed, first_index, &bounds);
    model.destandardize(v);
    return v;
}

std::vector<HWConfig> decode_latents(const Phase1Model& ae, const Tensor& latents,
                                     const DesignGrid& grid, Tensor* raw_numeric) {
    const auto d = ae.ae().decode(latents);
    std::vector<HWConfig> out(latents.rows());
    std::array<float, kNumNumeric> clamped{};
    for (std::size_t i = 0; i < latents.rows(); ++i) {
        const auto row = d.numeric.row(i);
        for (std::size_t j = 0; j < kNumNumeric; ++j) {
            clamped[j] = std::isfinite(row[j]) ? std::clamp(row[j], 0.0f, 1.0f) : 0.0f;
        }
        const auto raw = from_features(clamped, ae.normalizer().features());
        out[i] = round_to_grid(raw, d.loop_logits.row(i), grid);
    }
    if (raw_numeric != nullptr) {
        *raw_numeric = d.numeric;
    }
    return out;
}

namespace {

Tensor workload_rows(const Workload& w, std::size_t count) {
    const auto wv = normalize_workload(w);
    Tensor cw(count, 3);
    for (std::size_t i = 0; i < count; ++i) {
        std::copy(wv.begin(), wv.end(), cw.row(i).begin());
    }
    return cw;
}

void finish(Generation& g, const Phase2Model& ddm, const Phase1Model& ae, const Tensor& cond_p,
            const GenerateRequest& req, const DesignGrid& grid) {
    const auto t0 = std::chrono::steady_clock::now();
    g.latents = sample_latents(ddm, cond_p, workload_rows(req.workload, req.count), req.seed,
                               req.first_index);
    g.designs = decode_latents(ae, g.latents, grid, &g.raw_numeric);
    g.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_request(const GenerateRequest& req) {
    if (req.count < 1) {
        throw ConfigError("generation count must be at least 1");
    }
    validate(req.workload);
}

}  // namespace

Generation generate_hw(const Phase2Model& ddm, const Phase1Model& ae, double target_runtime_cycles,
                       const GenerateRequest& req, const DesignGrid& grid) {
    check_request(req);
    if (!(target_runtime_cycles > 0.0) || !std::isfinite(target_runtime_cycles)) {
        throw ConfigError("target runtime must be a positive number of cycles");
    }
    Generation g;
    g.stats = ae.normalizer().lookup(req.workload);
    AXE_CHECK(g.stats.stats != nullptr, "phase-1 normalizer holds no workload statistics");
    if (!g.stats.exact) {
        g.warnings.push_back("workload " + to_string(req.workload) +
                             " is not in the training suite; using statistics of " +
                             to_string(g.stats.stats->workload));
    }
    double p = normalize_runtime(target_runtime_cycles, *g.stats.stats);
    if (p < 0.0 || p > 1.0) {
        const double lo = std::exp(g.stats.stats->log_runtime.min);
        const double hi = std::exp(g.stats.stats->log_runtime.max);
        g.warnings.push_back("target runtime " + std::to_string(target_runtime_cycles) +
                             " outside the observed range [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]; condition clamped");
        p = std::clamp(p, 0.0, 1.0);
    }
    g.condition = p;
    const std::vector<float> cond(req.count, static_cast<float>(p));
    finish(g, ddm, ae, ddm.runtime_condition(cond), req, grid);
    return g;
}

Generation generate_hw_class(const Phase2Model& ddm, const Phase1Model& ae, int class_id,
                             const GenerateRequest& req, const DesignGrid& grid) {
    check_request(req);
    Generation g;
    g.class_id = class_id;
    const std::vector<int> ids(req.count, class_id);
    const Tensor cond = ddm.class_condition(ids);
    g.stats = ae.normalizer().lookup(req.workload);
    if (!g.stats.exact && g.stats.stats != nullptr) {
        g.warnings.push_back("workload " + to_string(req.workload) +
                             " is not in the training suite");
    }
    finish(g, ddm, ae, cond, req, grid);
    return g;
}

}  // namespace axe
