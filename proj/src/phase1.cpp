// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/phase1.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "axegen/csv.hpp"
#include "axegen/error.hpp"
#include "axegen/nn/checkpoint.hpp"
#include "axegen/nn/kernels.hpp"
#include "axegen/nn/loss.hpp"
#include "axegen/nn/optim.hpp"
#include "axegen/nn/rng.hpp"

namespace axe {

using nn::Tensor;

namespace {

constexpr std::string_view kArchitecture = "axegen.phase1.ae_pp.v1";
constexpr std::size_t kActiveLoops = 2;  // MNK, NMK
constexpr std::size_t kEvalChunk = 4096;

// Index of the runtime (or EDP) head used for relative-error reporting.
std::size_t primary_head(Phase1Mode mode) { return mode == Phase1Mode::PowerPerf ? 1 : 0; }

Tensor paste_columns(const Tensor& src, std::size_t total_cols, std::size_t offset) {
    Tensor out(src.rows(), total_cols);
    for (std::size_t i = 0; i < src.rows(); ++i) {
        std::memcpy(out.data() + i * total_cols + offset, src.data() + i * src.cols(),
                    src.cols() * sizeof(float));
    }
    return out;
}

void add_into(Tensor& dst, const Tensor& src) {
    require_same_shape(dst, src, "gradient sum");
    float* d = dst.data();
    const float* s = src.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        d[i] += s[i];
    }
}

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> rank(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) {
            ++j;
        }
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            rank[idx[k]] = r;
        }
        i = j + 1;
    }
    return rank;
}

}  // namespace

std::string_view to_string(Phase1Mode mode) {
    switch (mode) {
        case Phase1Mode::Runtime: return "runtime";
        case Phase1Mode::PowerPerf: return "power_perf";
        case Phase1Mode::Edp: return "edp";
    }
    return "runtime";
}

Phase1Mode parse_phase1_mode(std::string_view text) {
    if (text == "runtime") return Phase1Mode::Runtime;
    if (text == "power_perf" || text == "power+runtime") return Phase1Mode::PowerPerf;
    if (text == "edp") return Phase1Mode::Edp;
    throw ConfigError("unknown phase-1 mode '" + std::string(text) +
                      "' (expected runtime, power_perf or edp)");
}

std::size_t target_count(Phase1Mode mode) { return mode == Phase1Mode::PowerPerf ? 2 : 1; }

std::vector<float> row_targets(const DatasetRow& row, const WorkloadStats& stats, Phase1Mode mode) {
    const auto rt = static_cast<float>(
        normalize_runtime(static_cast<double>(row.perf.runtime_cycles), stats));
    switch (mode) {
        case Phase1Mode::Runtime: return {rt};
        case Phase1Mode::PowerPerf:
            return {static_cast<float>(normalize_power(row.perf.power_w, stats)), rt};
        case Phase1Mode::Edp: return {static_cast<float>(normalize_edp(row.perf.edp, stats))};
    }
    return {rt};
}

// ---- AutoEncoder -----------------------------------------------------------

AutoEncoder::AutoEncoder(std::size_t n_loops, nn::Pcg32& rng)
    : emb1_("ae.emb1", n_loops, kLoopEmbedDim, rng),
      enc_(nn::make_mlp("ae.enc", {kAeInputDim, 512, 256, kLatentDim}, rng)),
      dec_(nn::make_mlp("ae.dec", {kLatentDim, 256, 512, kAeInputDim}, rng)),
      emb2_("ae.emb2", kLoopEmbedDim, n_loops, rng) {}

Tensor AutoEncoder::encode(const Tensor& numeric, std::span<const int> loops) const {
    const Tensor emb = emb1_.apply(loops);
    return enc_.apply(Tensor::hcat({&numeric, &emb}));
}

AutoEncoder::Decoded AutoEncoder::decode(const Tensor& latent) const {
    Decoded d;
    d.raw = dec_.apply(latent);
    d.numeric = d.raw.columns(0, kNumNumeric);
    d.loop_logits = emb2_.apply(d.raw.columns(kNumNumeric, kAeInputDim));
    return d;
}

AutoEncoder::Forward AutoEncoder::forward(const Tensor& numeric, std::span<const int> loops) {
    Forward f;
    const Tensor emb = emb1_.apply(loops);
    f.input = Tensor::hcat({&numeric, &emb});
    f.latent = enc_.forward(f.input, true);
    f.out.raw = dec_.forward(f.latent, true);
    f.out.numeric = f.out.raw.columns(0, kNumNumeric);
    f.out.loop_logits = emb2_.forward(f.out.raw.columns(kNumNumeric, kAeInputDim), true);
    return f;
}

void AutoEncoder::backward(std::span<const int> loops, const Tensor& d_latent, const Tensor& d_raw,
                           const Tensor& d_logits, const Tensor& d_input_target) {
    Tensor d_dec_out = d_raw;
    add_into(d_dec_out, paste_columns(emb2_.backward(d_logits), kAeInputDim, kNumNumeric));
    Tensor d_lat = dec_.backward(d_dec_out);
    add_into(d_lat, d_latent);
    Tensor d_in = enc_.backward(d_lat);
    add_into(d_in, d_input_target);
    emb1_.backward(loops, d_in.columns(kNumNumeric, kAeInputDim));
}

void AutoEncoder::collect(std::vector<nn::Parameter*>& out) {
    out.push_back(&emb1_.table());
    enc_.collect(out);
    dec_.collect(out);
    emb2_.collect(out);
}

void AutoEncoder::collect(std::vector<const nn::Parameter*>& out) const {
    out.push_back(&emb1_.table());
    enc_.collect(out);
    dec_.collect(out);
    emb2_.collect(out);
}

// ---- PerformancePredictor --------------------------------------------------

PerformancePredictor::PerformancePredictor(std::size_t n_p, nn::Pcg32& rng)
    : workload_branch_(nn::make_mlp("pp.w", {3, 256, 256, 128, n_p}, rng)),
      latent_branch_("pp.v", kLatentDim, n_p, rng) {}

Tensor PerformancePredictor::apply(const Tensor& latent, const Tensor& workload) const {
    Tensor y = workload_branch_.apply(workload);
    add_into(y, latent_branch_.apply(latent));
    return y;
}

Tensor PerformancePredictor::forward(const Tensor& latent, const Tensor& workload, bool train) {
    Tensor y = workload_branch_.forward(workload, train);
    add_into(y, latent_branch_.forward(latent, train));
    return y;
}

Tensor PerformancePredictor::backward(const Tensor& grad_out) {
    workload_branch_.backward(grad_out);
    return latent_branch_.backward(grad_out);
}

Tensor PerformancePredictor::input_gradient(const Tensor& grad_out) const {
    const Tensor& w = latent_branch_.weight().value;
    AXE_CHECK(grad_out.cols() == w.cols(), "predictor gradient width");
    Tensor d(grad_out.rows(), w.rows());
    nn::kernels::gemm_nt(grad_out.rows(), w.rows(), w.cols(), grad_out.data(), w.data(), d.data(), false);
    return d;
}

void PerformancePredictor::collect(std::vector<nn::Parameter*>& out) {
    workload_branch_.collect(out);
    latent_branch_.collect(out);
}

void PerformancePredictor::collect(std::vector<const nn::Parameter*>& out) const {
    workload_branch_.collect(out);
    latent_branch_.collect(out);
}

// ---- hyperparameters -------------------------------------------------------

nlohmann::json Phase1Hyper::to_json() const {
    return {{"epochs", epochs},         {"batch_size", batch_size},
            {"lr", lr},                 {"weight_decay", weight_decay},
            {"patience", patience},     {"plateau_factor", plateau_factor},
            {"val_fraction", val_fraction}, {"seed", seed}};
}

Phase1Hyper Phase1Hyper::from_json(const nlohmann::json& doc) {
    Phase1Hyper h;
    h.epochs = doc.value("epochs", h.epochs);
    h.batch_size = doc.value("batch_size", h.batch_size);
    h.lr = doc.value("lr", h.lr);
    h.weight_decay = doc.value("weight_decay", h.weight_decay);
    h.patience = doc.value("patience", h.patience);
    h.plateau_factor = doc.value("plateau_factor", h.plateau_factor);
    h.val_fraction = doc.value("val_fraction", h.val_fraction);
    h.seed = doc.value("seed", h.seed);
    if (h.epochs < 1 || h.batch_size < 1 || !(h.lr > 0.0)) {
        throw ConfigError("phase-1 hyperparameters need epochs >= 1, batch_size >= 1, lr > 0");
    }
    return h;
}

// ---- Phase1Model -----------------------------------------------------------

namespace {

nn::Pcg32 init_rng(std::uint64_t seed) { return nn::Pcg32::derive(seed, 0x9a51); }

}  // namespace

Phase1Model::Phase1Model(Phase1Mode mode, DesignGrid grid, Normalizer normalizer, std::uint64_t seed)
    : mode_(mode),
      grid_(std::move(grid)),
      normalizer_(std::move(normalizer)),
      seed_(seed),
      ae_([&] {
          auto rng = init_rng(seed);
          return AutoEncoder(kActiveLoops, rng);
      }()),
      pp_([&] {
          auto rng = nn::Pcg32::derive(seed, 0x9a52);
          return PerformancePredictor(target_count(mode), rng);
      }()) {
    for (const auto order : grid_.loops()) {
        if (static_cast<std::size_t>(order) >= kActiveLoops) {
            throw ConfigError("phase-1 models support only MNK and NMK loop orders");
        }
    }
}

std::vector<nn::Parameter*> Phase1Model::parameters() {
    std::vector<nn::Parameter*> out;
    ae_.collect(out);
    pp_.collect(out);
    return out;
}

std::vector<const nn::Parameter*> Phase1Model::parameters() const {
    std::vector<const nn::Parameter*> out;
    ae_.collect(out);
    pp_.collect(out);
    return out;
}

HwBatch Phase1Model::make_batch(std::span<const HWConfig> configs,
                                std::span<const Workload> workloads) const {
    HwBatch b;
    b.numeric = Tensor(configs.size(), kNumNumeric);
    b.loops.resize(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const Features f = to_features(configs[i], normalizer_.features());
        std::copy(f.numeric.begin(), f.numeric.end(), b.numeric.row(i).begin());
        b.loops[i] = static_cast<int>(configs[i].loop);
    }
    b.workload = Tensor(workloads.size(), 3);
    for (std::size_t i = 0; i < workloads.size(); ++i) {
        const auto w = normalize_workload(workloads[i]);
        std::copy(w.begin(), w.end(), b.workload.row(i).begin());
    }
    return b;
}

Tensor Phase1Model::encode(std::span<const HWConfig> configs) const {
    const HwBatch b = make_batch(configs, {});
    return ae_.encode(b.numeric, b.loops);
}

std::vector<HWConfig> Phase1Model::decode_to_grid(const Tensor& latent, const DesignGrid& grid) const {
    const auto d = ae_.decode(latent);
    std::vector<HWConfig> out(latent.rows());
    std::array<float, kNumNumeric> clamped{};
    for (std::size_t i = 0; i < latent.rows(); ++i) {
        const auto row = d.numeric.row(i);
        for (std::size_t j = 0; j < kNumNumeric; ++j) {
            clamped[j] = std::isfinite(row[j]) ? std::clamp(row[j], 0.0f, 1.0f) : 0.0f;
        }
        const auto raw = from_features(clamped, normalizer_.features());
        out[i] = round_to_grid(raw, d.loop_logits.row(i), grid);
    }
    return out;
}

Tensor Phase1Model::predict(const Tensor& latent, std::span<const Workload> workloads) const {
    const HwBatch b = make_batch({}, workloads);
    return pp_.apply(latent, b.workload);
}

void Phase1Model::save(const std::filesystem::path& dir, nlohmann::json extra) const {
    extra["architecture"] = kArchitecture;
    extra["mode"] = to_string(mode_);
    extra["n_p"] = target_count(mode_);
    extra["init_seed"] = seed_;
    extra["grid"] = grid_.to_json();
    extra["normalizer"] = normalizer_.to_json();
    const auto params = parameters();
    nn::save_checkpoint(dir, std::move(extra), params);
}

Phase1Model Phase1Model::load(const std::filesystem::path& dir) {
    const auto manifest = nn::read_manifest(dir);
    if (manifest.value("architecture", "") != kArchitecture) {
        throw Error(dir.string() + " is not a phase-1 checkpoint");
    }
    Phase1Model model(parse_phase1_mode(manifest.at("mode").get<std::string>()),
                      DesignGrid::from_json(manifest.at("grid")),
                      Normalizer::from_json(manifest.at("normalizer")),
                      manifest.at("init_seed").get<std::uint64_t>());
    const auto params = model.parameters();
    nn::load_checkpoint(dir, params);
    return model;
}

// ---- training --------------------------------------------------------------

namespace {

// Precomputed per-row model inputs for a dataset.
struct RowInputs {
    std::vector<float> numeric;  // N x 6
    std::vector<int> loops;
    std::vector<float> workload; // N x 3
    std::vector<float> targets;  // N x n_p
    std::size_t n_p = 1;
};

RowInputs prepare_inputs(const Phase1Model& model, const Dataset& ds) {
    RowInputs in;
    in.n_p = target_count(model.mode());
    const std::size_t n = ds.size();
    in.numeric.resize(n * kNumNumeric);
    in.loops.resize(n);
    in.workload.resize(n * 3);
    in.targets.resize(n * in.n_p);
    std::vector<std::array<float, 3>> wvec(ds.suite.size());
    for (std::size_t i = 0; i < ds.suite.size(); ++i) {
        wvec[i] = normalize_workload(ds.suite[i]);
    }
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = ds.rows[r];
        const Features f = to_features(row.hw, model.normalizer().features());
        std::copy(f.numeric.begin(), f.numeric.end(), in.numeric.begin() + r * kNumNumeric);
        in.loops[r] = static_cast<int>(row.hw.loop);
        const auto& w = wvec[ds.row_workload[r]];
        std::copy(w.begin(), w.end(), in.workload.begin() + r * 3);
        const auto* stats = model.normalizer().find(row.w);
        if (stats == nullptr) {
            throw Error("phase-1 normalizer has no statistics for workload " + to_string(row.w));
        }
        const auto t = row_targets(row, *stats, model.mode());
        std::copy(t.begin(), t.end(), in.targets.begin() + r * in.n_p);
    }
    return in;
}

struct Batch {
    Tensor numeric;
    std::vector<int> loops;
    Tensor workload;
    Tensor targets;
};

Batch gather(const RowInputs& in, std::span<const std::size_t> rows) {
    Batch b{Tensor(rows.size(), kNumNumeric), std::vector<int>(rows.size()),
            Tensor(rows.size(), 3), Tensor(rows.size(), in.n_p)};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        std::memcpy(b.numeric.data() + i * kNumNumeric, in.numeric.data() + r * kNumNumeric,
                    kNumNumeric * sizeof(float));
        b.loops[i] = in.loops[r];
        std::memcpy(b.workload.data() + i * 3, in.workload.data() + r * 3, 3 * sizeof(float));
        std::memcpy(b.targets.data() + i * in.n_p, in.targets.data() + r * in.n_p,
                    in.n_p * sizeof(float));
    }
    return b;
}

struct LossParts {
    double recon = 0.0;
    double pred = 0.0;
};

// Per-head MSE summed over heads = n_p * element-mean MSE.
nn::LossResult pred_loss(const Tensor& pred, const Tensor& target) {
    auto r = nn::mse_loss(pred, target);
    const auto heads = static_cast<float>(pred.cols());
    r.loss *= heads;
    for (float& g : r.grad.span()) {
        g *= heads;
    }
    return r;
}

struct EvalChunk {
    double recon_sum = 0.0;
    double pred_sum = 0.0;
    std::size_t exact = 0;
};

}  // namespace

double roundtrip_fraction(const Phase1Model& model, std::span<const HWConfig> configs,
                          const DesignGrid& grid) {
    if (configs.empty()) {
        return 0.0;
    }
    const std::size_t n_chunks = (configs.size() + kEvalChunk - 1) / kEvalChunk;
    std::vector<std::size_t> exact(n_chunks, 0);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(n_chunks); ++ci) {
        const std::size_t begin = static_cast<std::size_t>(ci) * kEvalChunk;
        const auto chunk = configs.subspan(begin, std::min(kEvalChunk, configs.size() - begin));
        const auto decoded = model.decode_to_grid(model.encode(chunk), grid);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            exact[static_cast<std::size_t>(ci)] += decoded[i] == chunk[i];
        }
    }
    const auto total = std::accumulate(exact.begin(), exact.end(), std::size_t{0});
    return static_cast<double>(total) / static_cast<double>(configs.size());
}

Phase1Eval evaluate_phase1(const Phase1Model& model, const Dataset& ds,
                           std::span<const std::size_t> rows) {
    Phase1Eval ev;
    ev.rows = rows.size();
    if (rows.empty()) {
        return ev;
    }
    const std::size_t head = primary_head(model.mode());
    const std::size_t n_chunks = (rows.size() + kEvalChunk - 1) / kEvalChunk;
    std::vector<EvalChunk> chunks(n_chunks);
    std::vector<double> rel_err(rows.size());

#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(n_chunks); ++ci) {
        const std::size_t begin = static_cast<std::size_t>(ci) * kEvalChunk;
        const std::size_t end = std::min(rows.size(), begin + kEvalChunk);
        const std::size_t b = end - begin;
        std::vector<HWConfig> configs(b);
        std::vector<Workload> workloads(b);
        Tensor targets(b, target_count(model.mode()));
        for (std::size_t i = 0; i < b; ++i) {
            const std::size_t r = rows[begin + i];
            configs[i] = ds.rows[r].hw;
            workloads[i] = ds.rows[r].w;
            const auto t = row_targets(ds.rows[r], *model.normalizer().find(ds.rows[r].w),
                                       model.mode());
            std::copy(t.begin(), t.end(), targets.row(i).begin());
        }
        const HwBatch batch = model.make_batch(configs, workloads);
        const Tensor emb = model.ae().encode(batch.numeric, batch.loops);  // latent
        const auto dec = model.ae().decode(emb);
        const Tensor emb_in = model.ae().emb1().apply(batch.loops);
        const Tensor input = Tensor::hcat({&batch.numeric, &emb_in});
        EvalChunk& c = chunks[static_cast<std::size_t>(ci)];
        c.recon_sum = (nn::mse_loss(dec.raw, input).loss +
                       nn::cross_entropy_loss(dec.loop_logits, batch.loops).loss) *
                      static_cast<double>(b);
        const Tensor pred = model.pp().apply(emb, batch.workload);
        c.pred_sum = pred_loss(pred, targets).loss * static_cast<double>(b);

        const auto decoded = model.decode_to_grid(emb, model.grid());
        for (std::size_t i = 0; i < b; ++i) {
            const std::size_t r = rows[begin + i];
            if (decoded[i] == configs[i]) {
                ++c.exact;
            }
            const auto& stats = *model.normalizer().find(workloads[i]);
            const double p = pred(i, head);
            double truth = 0.0;
            double est = 0.0;
            if (model.mode() == Phase1Mode::Edp) {
                truth = ds.rows[r].perf.edp;
                est = denormalize_edp(p, stats);
            } else {
                truth = static_cast<double>(ds.rows[r].perf.runtime_cycles);
                est = denormalize_runtime(p, stats);
            }
            rel_err[begin + i] = std::abs(est - truth) / truth;
        }
    }

    std::size_t exact = 0;
    for (const auto& c : chunks) {
        ev.recon_loss += c.recon_sum;
        ev.pred_loss += c.pred_sum;
        exact += c.exact;
    }
    const auto n = static_cast<double>(rows.size());
    ev.recon_loss /= n;
    ev.pred_loss /= n;
    ev.roundtrip_fraction = static_cast<double>(exact) / n;
    const auto mid = rel_err.begin() + static_cast<std::ptrdiff_t>(rel_err.size() / 2);
    std::nth_element(rel_err.begin(), mid, rel_err.end());
    ev.pp_median_abs_rel_error = *mid;
    return ev;
}

Phase1TrainResult train_phase1(Phase1Model& model, const Dataset& ds, const Phase1Hyper& hyper,
                               const EpochCallback& on_epoch) {
    if (ds.size() == 0) {
        throw ConfigError("phase-1 training needs a non-empty dataset");
    }
    auto split_rng = nn::Pcg32::derive(hyper.seed, 0x5917);
    const Split sp = split(ds, hyper.val_fraction, split_rng);
    const RowInputs inputs = prepare_inputs(model, ds);

    auto params = model.parameters();
    nn::AdamW opt(params, {hyper.lr, 0.9, 0.999, 1e-8, hyper.weight_decay});
    nn::PlateauScheduler sched(hyper.patience, hyper.plateau_factor);

    Phase1TrainResult result;
    std::vector<std::size_t> order = sp.train;
    for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
        auto shuffle_rng = nn::Pcg32::derive(hyper.seed, 0x10000 + static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order.begin(), order.end());

        double recon_sum = 0.0;
        double pred_sum = 0.0;
        std::size_t seen = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += hyper.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + hyper.batch_size);
            const Batch b = gather(inputs, std::span(order).subspan(start, end - start));
            const std::size_t bs = end - start;

            opt.zero_grad();
            auto fw = model.ae().forward(b.numeric, b.loops);
            const Tensor pred = model.pp().forward(fw.latent, b.workload, true);

            auto recon = nn::mse_loss(fw.out.raw, fw.input);
            auto ce = nn::cross_entropy_loss(fw.out.loop_logits, b.loops);
            auto pl = pred_loss(pred, b.targets);
            const double loss = recon.loss + ce.loss + pl.loss;
            if (!std::isfinite(loss)) {
                throw NumericalError("phase-1 loss is not finite at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(batch_index) +
                                     " (lr=" + std::to_string(opt.lr()) + ")");
            }

            Tensor d_target = recon.grad;
            for (float& g : d_target.span()) {
                g = -g;
            }
            const Tensor d_latent = model.pp().backward(pl.grad);
            model.ae().backward(b.loops, d_latent, recon.grad, ce.grad, d_target);
            opt.step();

            recon_sum += (recon.loss + ce.loss) * static_cast<double>(bs);
            pred_sum += pl.loss * static_cast<double>(bs);
            seen += bs;
        }

        const Phase1Eval val = evaluate_phase1(model, ds, sp.val);
        Phase1EpochMetrics m;
        m.epoch = epoch;
        m.lr = opt.lr();
        m.train_recon = recon_sum / static_cast<double>(seen);
        m.train_pred = pred_sum / static_cast<double>(seen);
        m.train_loss = m.train_recon + m.train_pred;
        m.val_loss = val.recon_loss + val.pred_loss;
        result.history.push_back(m);
        result.validation = val;
        if (on_epoch) {
            on_epoch(m);
        }
        opt.set_lr(sched.observe(m.val_loss, opt.lr()));
    }
    return result;
}

// ---- latent quality --------------------------------------------------------

double spearman(std::span<const double> a, std::span<const double> b) {
    AXE_CHECK(a.size() == b.size(), "spearman needs equal-length samples");
    if (a.size() < 2) {
        return 0.0;
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n + 1.0) / 2.0;
    double cov = 0.0;
    double va = 0.0;
    double vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - mean) * (rb[i] - mean);
        va += (ra[i] - mean) * (ra[i] - mean);
        vb += (rb[i] - mean) * (rb[i] - mean);
    }
    if (va == 0.0 || vb == 0.0) {
        return 0.0;
    }
    return cov / std::sqrt(va * vb);
}

std::vector<LatentQualityRow> latent_quality_report(const Phase1Model& model, const Dataset& ds,
                                                    std::size_t pairs_per_workload,
                                                    std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> strata(ds.suite.size());
    for (std::size_t r = 0; r < ds.size(); ++r) {
        strata[ds.row_workload[r]].push_back(r);
    }
    std::vector<LatentQualityRow> out(ds.suite.size());
    for (std::size_t wi = 0; wi < ds.suite.size(); ++wi) {
        const auto& rows = strata[wi];
        LatentQualityRow& q = out[wi];
        q.workload = ds.suite[wi];
        if (rows.empty()) {
            continue;
        }
        const auto& stats = ds.normalizer.workloads()[wi];
        std::vector<HWConfig> configs(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            configs[i] = ds.rows[rows[i]].hw;
        }
        Tensor latent(rows.size(), kLatentDim);
        std::size_t exact = 0;
        for (std::size_t begin = 0; begin < rows.size(); begin += kEvalChunk) {
            const std::size_t end = std::min(rows.size(), begin + kEvalChunk);
            const auto part = std::span(configs).subspan(begin, end - begin);
            const Tensor v = model.encode(part);
            std::memcpy(latent.data() + begin * kLatentDim, v.data(), v.size() * sizeof(float));
            const auto back = model.decode_to_grid(v, model.grid());
            for (std::size_t i = 0; i < part.size(); ++i) {
                exact += back[i] == part[i] ? 1 : 0;
            }
        }
        q.roundtrip_fraction = static_cast<double>(exact) / static_cast<double>(rows.size());

        auto rng = nn::Pcg32::derive(seed, wi);
        std::vector<double> dist;
        std::vector<double> dp;
        for (std::size_t k = 0; k < pairs_per_workload && rows.size() > 1; ++k) {
            const auto i = rng.below(rows.size());
            auto j = rng.below(rows.size() - 1);
            if (j >= i) {
                ++j;
            }
            double d2 = 0.0;
            const auto vi = latent.row(i);
            const auto vj = latent.row(j);
            for (std::size_t c = 0; c < kLatentDim; ++c) {
                const double d = static_cast<double>(vi[c]) - vj[c];
                d2 += d * d;
            }
            const double pi = normalize_runtime(
                static_cast<double>(ds.rows[rows[i]].perf.runtime_cycles), stats);
            const double pj = normalize_runtime(
                static_cast<double>(ds.rows[rows[j]].perf.runtime_cycles), stats);
            dist.push_back(std::sqrt(d2));
            dp.push_back(std::abs(pi - pj));
        }
        q.pairs = dist.size();
        q.spearman = spearman(dist, dp);
    }
    return out;
}

std::string latent_quality_csv(const std::vector<LatentQualityRow>& rows, const Provenance& prov) {
    std::string text = prov.csv_comment() + "\n";
    text += "m,k,n,roundtrip_fraction,spearman_latent_vs_runtime,pairs\n";
    for (const auto& q : rows) {
        csv::row(text, q.workload.m, q.workload.k, q.workload.n, q.roundtrip_fraction, q.spearman,
                 static_cast<std::uint64_t>(q.pairs));
    }
    return text;
}

}  // namespace axe
