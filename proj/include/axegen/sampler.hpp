// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "axegen/conditioning.hpp"
#include "axegen/design_space.hpp"
#include "axegen/diffusion.hpp"
#include "axegen/phase1.hpp"

namespace axe {

// One reverse step:
//   mu = (v_t - beta_t / sqrt(1 - abar_t) * eps_hat) / sqrt(alpha_t)
//   out = mu + sqrt(beta_t) * z,  with z ignored at t = 1.
void reverse_step(std::span<const float> v_t, std::span<const float> eps_hat, int t,
                  const NoiseSchedule& schedule, std::span<const float> z, std::span<float> out);

// Per-dimension box for the clean-sample estimate.
struct LatentBounds {
    std::span<const float> lo;
    std::span<const float> hi;
};

// The same step written through the clean-sample estimate
//   x0 = (v_t - sqrt(1 - abar_t) * eps_hat) / sqrt(abar_t),
// clipped to `bounds`, then
//   mu = sqrt(abar_{t-1}) beta_t / (1 - abar_t) * x0
//      + sqrt(alpha_t) (1 - abar_{t-1}) / (1 - abar_t) * v_t.
// Equals reverse_step whenever x0 lies inside the box. The denoiser's output
// scale is bounded (its input passes through LayerNorm), so without the clip
// a trajectory that leaves the training range is amplified by 1/sqrt(alpha_t)
// at every step.
void reverse_step_clipped(std::span<const float> v_t, std::span<const float> eps_hat, int t,
                          const NoiseSchedule& schedule, const LatentBounds& bounds,
                          std::span<const float> z, std::span<float> out);

// Runs the full chain T..1 for every row of the conditions. Row i draws all its
// noise from Pcg32::derive(seed, first_index + i), so a row's sample does not
// depend on which other rows share the batch. With `bounds`, every step is
// reverse_step_clipped. Throws NumericalError naming t if an intermediate goes
// non-finite.
nn::Tensor reverse_sample(const Denoiser& model, const NoiseSchedule& schedule,
                          const nn::Tensor& cond_p, const nn::Tensor& cond_w, std::uint64_t seed,
                          std::uint64_t first_index = 0, const LatentBounds* bounds = nullptr);

// Clipped reverse_sample within the model's latent range, followed by
// de-standardization into phase-1 latent units.
nn::Tensor sample_latents(const Phase2Model& model, const nn::Tensor& cond_p,
                          const nn::Tensor& cond_w, std::uint64_t seed,
                          std::uint64_t first_index = 0);

struct Generation {
    std::vector<HWConfig> designs;
    nn::Tensor latents;        // phase-1 latent units
    nn::Tensor raw_numeric;    // decoder numerics before clamping, normalized units
    double condition = 0.0;    // normalized runtime target (runtime mode)
    int class_id = -1;         // class mode
    StatsLookup stats;         // statistics used to normalize the target
    std::vector<std::string> warnings;
    double seconds = 0.0;      // wall time of sampling + decoding
};

struct GenerateRequest {
    Workload workload;
    std::size_t count = 1;
    std::uint64_t seed = 0;
    std::uint64_t first_index = 0;
};

// Runtime-conditioned generation. The target is normalized with the
// workload's statistics (nearest training workload if unseen) and clamped to
// [0, 1] with a warning when it falls outside the observed range.
Generation generate_hw(const Phase2Model& ddm, const Phase1Model& ae, double target_runtime_cycles,
                       const GenerateRequest& req, const DesignGrid& grid);

// Class-conditioned generation; throws ConfigError for an invalid class.
Generation generate_hw_class(const Phase2Model& ddm, const Phase1Model& ae, int class_id,
                             const GenerateRequest& req, const DesignGrid& grid);

// Decodes latents and snaps them to `grid`; also returns the raw numerics.
std::vector<HWConfig> decode_latents(const Phase1Model& ae, const nn::Tensor& latents,
                                     const DesignGrid& grid, nn::Tensor* raw_numeric = nullptr);

}  // namespace axe
