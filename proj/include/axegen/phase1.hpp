// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "axegen/dataset.hpp"
#include "axegen/design_space.hpp"
#include "axegen/nn/layers.hpp"
#include "axegen/provenance.hpp"

namespace axe {

inline constexpr std::size_t kLatentDim = 128;
inline constexpr std::size_t kLoopEmbedDim = 8;
inline constexpr std::size_t kAeInputDim = kNumNumeric + kLoopEmbedDim;  // 14

// Supervision target of the performance predictor.
//   runtime     n_p = 1, normalized log runtime
//   power_perf  n_p = 2, (normalized power, normalized log runtime)
//   edp         n_p = 1, normalized log EDP
enum class Phase1Mode { Runtime, PowerPerf, Edp };

std::string_view to_string(Phase1Mode mode);
Phase1Mode parse_phase1_mode(std::string_view text);
std::size_t target_count(Phase1Mode mode);

// Normalized supervision targets of one dataset row.
std::vector<float> row_targets(const DatasetRow& row, const WorkloadStats& stats, Phase1Mode mode);

// Encoder input assembled for a batch: numeric features, loop ids, workload vectors.
struct HwBatch {
    nn::Tensor numeric;     // [B x 6], normalized
    std::vector<int> loops; // index into grid.loops()
    nn::Tensor workload;    // [B x 3], normalize_workload
};

class AutoEncoder {
public:
    AutoEncoder(std::size_t n_loops, nn::Pcg32& rng);

    std::size_t n_loops() const { return emb1_.vocab(); }

    // v = ENC(concat(numeric, Emb1(loop)))
    nn::Tensor encode(const nn::Tensor& numeric, std::span<const int> loops) const;

    struct Decoded {
        nn::Tensor raw;          // [B x 14] decoder output
        nn::Tensor numeric;      // first 6 columns, normalized units
        nn::Tensor loop_logits;  // Emb2 of the last 8 columns, [B x n_loops]
    };
    Decoded decode(const nn::Tensor& latent) const;

    // Training path: forward caches activations, backward consumes them.
    struct Forward {
        nn::Tensor input;  // [B x 14], target of the reconstruction
        nn::Tensor latent;
        Decoded out;
    };
    Forward forward(const nn::Tensor& numeric, std::span<const int> loops);
    // d_input_target is dL/d(input) through its role as reconstruction target.
    void backward(std::span<const int> loops, const nn::Tensor& d_latent, const nn::Tensor& d_raw,
                  const nn::Tensor& d_logits, const nn::Tensor& d_input_target);

    void collect(std::vector<nn::Parameter*>& out);
    void collect(std::vector<const nn::Parameter*>& out) const;

    nn::Embedding& emb1() { return emb1_; }
    const nn::Embedding& emb1() const { return emb1_; }
    nn::Sequential& encoder() { return enc_; }
    nn::Sequential& decoder() { return dec_; }
    nn::Linear& emb2() { return emb2_; }

private:
    nn::Embedding emb1_;
    nn::Sequential enc_;
    nn::Sequential dec_;
    nn::Linear emb2_;
};

// g(v, w) = MLP_w(w) + Linear(v)
class PerformancePredictor {
public:
    PerformancePredictor(std::size_t n_p, nn::Pcg32& rng);

    std::size_t outputs() const { return latent_branch_.out_features(); }

    nn::Tensor apply(const nn::Tensor& latent, const nn::Tensor& workload) const;
    nn::Tensor forward(const nn::Tensor& latent, const nn::Tensor& workload, bool train);
    // Returns dL/d(latent); workload-branch parameter gradients are accumulated.
    nn::Tensor backward(const nn::Tensor& grad_out);
    // dL/d(latent) for a given dL/d(output), without touching parameter grads.
    nn::Tensor input_gradient(const nn::Tensor& grad_out) const;

    void collect(std::vector<nn::Parameter*>& out);
    void collect(std::vector<const nn::Parameter*>& out) const;

private:
    nn::Sequential workload_branch_;
    nn::Linear latent_branch_;
};

struct Phase1Hyper {
    int epochs = 5;
    std::size_t batch_size = 512;
    double lr = 1e-4;
    double weight_decay = 1e-3;
    int patience = 2;
    double plateau_factor = 0.1;
    double val_fraction = 0.1;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static Phase1Hyper from_json(const nlohmann::json& doc);
};

struct Phase1EpochMetrics {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_recon = 0.0;
    double train_pred = 0.0;
    double val_loss = 0.0;
};

struct Phase1Eval {
    std::size_t rows = 0;
    double recon_loss = 0.0;
    double pred_loss = 0.0;
    double roundtrip_fraction = 0.0;          // exact HWConfig recovery after rounding
    double pp_median_abs_rel_error = 0.0;     // de-normalized runtime (or EDP in edp mode)
};

class Phase1Model {
public:
    Phase1Model(Phase1Mode mode, DesignGrid grid, Normalizer normalizer, std::uint64_t seed);

    Phase1Mode mode() const { return mode_; }
    const DesignGrid& grid() const { return grid_; }
    const Normalizer& normalizer() const { return normalizer_; }
    std::uint64_t seed() const { return seed_; }

    AutoEncoder& ae() { return ae_; }
    const AutoEncoder& ae() const { return ae_; }
    PerformancePredictor& pp() { return pp_; }
    const PerformancePredictor& pp() const { return pp_; }

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;

    HwBatch make_batch(std::span<const HWConfig> configs, std::span<const Workload> workloads) const;

    nn::Tensor encode(std::span<const HWConfig> configs) const;
    // Decode, clamp numerics to [0,1], de-normalize and snap to `grid`.
    std::vector<HWConfig> decode_to_grid(const nn::Tensor& latent, const DesignGrid& grid) const;
    // Predictor output for latents paired row-wise with workloads.
    nn::Tensor predict(const nn::Tensor& latent, std::span<const Workload> workloads) const;

    // Checkpoint directory: manifest.json + tensors/.
    void save(const std::filesystem::path& dir, nlohmann::json extra) const;
    static Phase1Model load(const std::filesystem::path& dir);

private:
    Phase1Mode mode_;
    DesignGrid grid_;
    Normalizer normalizer_;
    std::uint64_t seed_;
    AutoEncoder ae_;
    PerformancePredictor pp_;
};

struct Phase1TrainResult {
    std::vector<Phase1EpochMetrics> history;
    Phase1Eval validation;
};

using EpochCallback = std::function<void(const Phase1EpochMetrics&)>;

// Minimizes L_recon + L_pred with AdamW and a plateau scheduler on validation
// loss. Throws NumericalError on a non-finite loss.
Phase1TrainResult train_phase1(Phase1Model& model, const Dataset& ds, const Phase1Hyper& hyper,
                               const EpochCallback& on_epoch = {});

// Evaluates reconstruction and prediction quality on the given dataset rows.
Phase1Eval evaluate_phase1(const Phase1Model& model, const Dataset& ds,
                           std::span<const std::size_t> rows);

// Fraction of `configs` that survive encode -> decode -> round_to_grid(grid).
double roundtrip_fraction(const Phase1Model& model, std::span<const HWConfig> configs,
                          const DesignGrid& grid);

struct LatentQualityRow {
    Workload workload;
    double roundtrip_fraction = 0.0;
    double spearman = 0.0;  // latent L2 distance vs |delta normalized runtime|
    std::size_t pairs = 0;
};

std::vector<LatentQualityRow> latent_quality_report(const Phase1Model& model, const Dataset& ds,
                                                    std::size_t pairs_per_workload,
                                                    std::uint64_t seed);
std::string latent_quality_csv(const std::vector<LatentQualityRow>& rows, const Provenance& prov);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace axe
