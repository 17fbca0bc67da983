// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-phase training: weighted multi-task pretext pretraining of the encoder,
// then inpainting with the transplanted, frozen encoder.
//
// Every random draw comes from an Rng seeded by derive_seed(hyper.seed, ...)
// with a fixed stream id per purpose, so a run is a pure function of
// (seed, config, dataset).

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "wssl/error.hpp"
#include "wssl/format.hpp"
#include "wssl/image.hpp"
#include "wssl/losses.hpp"
#include "wssl/mask.hpp"
#include "wssl/model.hpp"
#include "wssl/optim.hpp"

namespace wssl {

struct DataOptions {
    std::size_t resize_to = 36;
    std::size_t crop_to = 32;
};

struct LossOptions {
    SsimParams ssim;
    LogCoshParams logcosh;
    WsslLossParams wssl;
};

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    std::map<PretextTask, double> accuracy;
    double holdout_ssim = std::numeric_limits<double>::quiet_NaN();
    double holdout_psnr = std::numeric_limits<double>::quiet_NaN();
};

struct TrainLog {
    bool downstream = false;
    std::vector<PretextTask> tasks;
    std::vector<EpochRecord> epochs;

    std::string to_csv() const {
        std::ostringstream os;
        os << "epoch,mean_loss";
        if (downstream) {
            os << ",holdout_ssim,holdout_psnr\n";
        } else {
            for (auto t : tasks) os << ",acc_" << task_name(t);
            os << '\n';
        }
        for (const auto& r : epochs) {
            os << r.epoch << ',' << format_number(r.mean_loss);
            if (downstream) {
                os << ',' << format_number(r.holdout_ssim) << ',' << format_number(r.holdout_psnr);
            } else {
                for (auto t : tasks) os << ',' << format_number(r.accuracy.at(t));
            }
            os << '\n';
        }
        return os.str();
    }
};

struct TrainResult {
    Network network;
    AdamState adam;
    TrainLog log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

namespace seed_stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t shuffle = 2;
inline constexpr std::uint64_t sample = 3;
inline constexpr std::uint64_t transplant = 11;
inline constexpr std::uint64_t holdout_mask = 12;
} // namespace seed_stream

namespace detail {

inline void require_dataset(const std::vector<Image>& images, const TrainHyper& h) {
    if (images.empty()) throw ArgumentError("training dataset is empty");
    if (images.size() < static_cast<std::size_t>(h.batch_size))
        throw ArgumentError("dataset has " + std::to_string(images.size()) + " images, fewer than batch_size " +
                            std::to_string(h.batch_size));
}

inline void require_data_options(const DataOptions& d, const UNetConfig& cfg) {
    if (d.crop_to != static_cast<std::size_t>(cfg.input_size))
        throw ArgumentError("crop_to must equal the model input_size");
    if (d.crop_to > d.resize_to) throw ArgumentError("crop_to must not exceed resize_to");
}

// Shuffled index order for one epoch; the trailing partial batch is dropped.
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, const TrainHyper& h, int epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(h.seed, seed_stream::shuffle, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order.begin(), order.end());
    const auto bs = static_cast<std::size_t>(h.batch_size);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start + bs <= n; start += bs)
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(start + bs));
    return batches;
}

inline Rng sample_rng(const TrainHyper& h, int epoch, std::size_t position) {
    return Rng(derive_seed(h.seed, seed_stream::sample, static_cast<std::uint64_t>(epoch), position));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Pretext phase

/// Fraction of correctly classified levels per task on centre-cropped images.
/// For each task every level is applied with the other tasks at identity.
inline std::map<PretextTask, double> evaluate_pretext(const Network& net, const std::vector<Image>& images,
                                                      const DataOptions& data) {
    const auto specs = specs_for(net.tasks);
    std::map<PretextTask, double> acc;
    for (std::size_t ti = 0; ti < specs.size(); ++ti) {
        std::size_t correct = 0, total = 0;
        for (const auto& src : images) {
            const Image base = prepare_center(src, data.resize_to, data.crop_to);
            for (std::size_t level = 0; level < kNumLevels; ++level) {
                std::vector<std::size_t> levels;
                for (const auto& s : specs) levels.push_back(s.identity_level());
                levels[ti] = level;
                const auto sample = apply_levels(base, specs, levels);
                const auto logits = forward_pretext(net, to_tensor<float>(sample.augmented));
                correct += argmax(logits[ti]) == level ? 1 : 0;
                ++total;
            }
        }
        acc[specs[ti].task] = static_cast<double>(correct) / static_cast<double>(total);
    }
    return acc;
}

inline TrainResult train_pretext(const std::vector<Image>& images, const TaskWeights& weights, const UNetConfig& cfg,
                                 const TrainHyper& h, const DataOptions& data = {}, const EpochCallback& on_epoch = {}) {
    weights.validate();
    cfg.validate();
    h.validate();
    detail::require_dataset(images, h);
    detail::require_data_options(data, cfg);

    const auto tasks = weights.tasks();
    const auto specs = specs_for(tasks);
    Rng init(derive_seed(h.seed, seed_stream::init));
    TrainResult result{build_pretext<float>(cfg, tasks, init), {}, {}};
    result.log.tasks = tasks;
    auto& net = result.network;

    for (int epoch = 0; epoch < h.epochs_pretext; ++epoch) {
        double loss_sum = 0.0;
        std::size_t steps = 0;
        std::map<PretextTask, std::size_t> hits;
        std::size_t seen = 0;
        const auto batches = detail::epoch_batches(images.size(), h, epoch);
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& batch = batches[b];
            std::map<PretextTask, Tensor> per_task;
            for (std::size_t j = 0; j < batch.size(); ++j) {
                Rng rng = detail::sample_rng(h, epoch, b * batch.size() + j);
                const Image crop = prepare_sample(images[batch[j]], rng, data.resize_to, data.crop_to);
                const auto sample = pretext_sample(crop, specs, rng);
                const auto logits = forward_pretext(net, to_tensor<float>(sample.augmented));
                for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
                    const auto label = sample.labels.at(tasks[ti]);
                    hits[tasks[ti]] += argmax(logits[ti]) == label ? 1 : 0;
                    auto ce = softmax_cross_entropy(logits[ti], label);
                    auto& acc = per_task[tasks[ti]];
                    acc = acc ? add(acc, ce) : ce;
                }
                ++seen;
            }
            for (auto& [task, l] : per_task) l = scalar_mul(l, 1.0f / static_cast<float>(batch.size()));
            auto loss = weighted_pretext_loss(per_task, weights);
            loss_sum += loss.item();
            ++steps;
            net.zero_grad();
            backward(loss);
            adam_step(net, result.adam, h);
        }
        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.mean_loss = steps ? loss_sum / static_cast<double>(steps) : 0.0;
        for (auto t : tasks) rec.accuracy[t] = seen ? static_cast<double>(hits[t]) / static_cast<double>(seen) : 0.0;
        result.log.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    net.zero_grad();
    return result;
}

// ---------------------------------------------------------------------------
// Downstream phase

struct InpaintScores {
    double ssim = 0.0;
    double psnr = 0.0;
    double masked_ssim = 0.0;
    double masked_psnr = 0.0;
};

/// Fixed evaluation pairs: centre-cropped images with seeded masks.
struct HoldoutSet {
    std::vector<Image> originals;
    std::vector<Mask> masks;
};

inline HoldoutSet make_holdout(const std::vector<Image>& images, const MaskSpec& spec, const DataOptions& data,
                               std::uint64_t seed) {
    HoldoutSet set;
    for (std::size_t i = 0; i < images.size(); ++i) {
        set.originals.push_back(prepare_center(images[i], data.resize_to, data.crop_to));
        Rng rng(derive_seed(seed, seed_stream::holdout_mask, i));
        set.masks.push_back(generate_mask(data.crop_to, data.crop_to, spec, rng));
    }
    return set;
}

inline Image inpaint(const Network& net, const Image& masked) {
    return to_image(forward_unet(net, to_tensor<float>(masked)));
}

/// Network output inside the missing region, input pixels elsewhere.
inline Image inpaint_composite(const Network& net, const Image& masked, const Mask& mask) {
    if (mask.height != masked.height || mask.width != masked.width)
        throw ShapeError("inpaint: mask " + std::to_string(mask.height) + "x" + std::to_string(mask.width) +
                         " does not match image " + std::to_string(masked.height) + "x" + std::to_string(masked.width));
    Image out = masked;
    const Image recon = inpaint(net, masked);
    for (std::size_t y = 0; y < out.height; ++y)
        for (std::size_t x = 0; x < out.width; ++x)
            if (mask.missing(y, x))
                for (std::size_t k = 0; k < 3; ++k) out.at(y, x, k) = recon.at(y, x, k);
    return out;
}

/// Mean SSIM/PSNR of the network output and of the masked input, both against
/// the original.
inline InpaintScores evaluate_inpainting(const Network& net, const HoldoutSet& set, const SsimParams& ssim_p,
                                         float fill = 0.0f) {
    InpaintScores s;
    if (set.originals.empty()) return s;
    for (std::size_t i = 0; i < set.originals.size(); ++i) {
        const Image masked = apply_mask(set.originals[i], set.masks[i], fill);
        const Image recon = inpaint(net, masked);
        s.ssim += ssim_value(recon, set.originals[i], ssim_p);
        s.psnr += psnr(recon, set.originals[i]);
        s.masked_ssim += ssim_value(masked, set.originals[i], ssim_p);
        s.masked_psnr += psnr(masked, set.originals[i]);
    }
    const double n = static_cast<double>(set.originals.size());
    s.ssim /= n;
    s.psnr /= n;
    s.masked_ssim /= n;
    s.masked_psnr /= n;
    return s;
}

inline TrainResult train_downstream(const Network& pretext, const std::vector<Image>& images, const HoldoutSet& holdout,
                                    const MaskSpec& masks, const UNetConfig& cfg, const TrainHyper& h,
                                    const LossOptions& loss_opts = {}, const DataOptions& data = {},
                                    float fill = 0.0f, const EpochCallback& on_epoch = {}) {
    cfg.validate();
    h.validate();
    masks.validate();
    loss_opts.wssl.validate();
    loss_opts.logcosh.validate();
    loss_opts.ssim.validate();
    detail::require_dataset(images, h);
    detail::require_data_options(data, cfg);

    Rng init(derive_seed(h.seed, seed_stream::transplant));
    TrainResult result{transplant_and_freeze(pretext, cfg, init), {}, {}};
    result.log.downstream = true;
    auto& net = result.network;

    for (int epoch = 0; epoch < h.epochs_downstream; ++epoch) {
        double loss_sum = 0.0;
        std::size_t steps = 0;
        const auto batches = detail::epoch_batches(images.size(), h, epoch);
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& batch = batches[b];
            Tensor total;
            for (std::size_t j = 0; j < batch.size(); ++j) {
                Rng rng = detail::sample_rng(h, epoch, b * batch.size() + j);
                const Image original = prepare_sample(images[batch[j]], rng, data.resize_to, data.crop_to);
                const Mask mask = generate_mask(original.height, original.width, masks, rng);
                const Image masked = apply_mask(original, mask, fill);
                auto pred = forward_unet(net, to_tensor<float>(masked));
                auto l = loss_wssl(pred, to_tensor<float>(original), loss_opts.ssim, loss_opts.logcosh, loss_opts.wssl);
                total = total ? add(total, l) : l;
            }
            auto loss = scalar_mul(total, 1.0f / static_cast<float>(batch.size()));
            loss_sum += loss.item();
            ++steps;
            net.zero_grad();
            backward(loss);
            adam_step(net, result.adam, h);
        }
        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.mean_loss = steps ? loss_sum / static_cast<double>(steps) : 0.0;
        if (!holdout.originals.empty()) {
            const auto scores = evaluate_inpainting(net, holdout, loss_opts.ssim, fill);
            rec.holdout_ssim = scores.ssim;
            rec.holdout_psnr = scores.psnr;
        }
        result.log.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    net.zero_grad();
    return result;
}

} // namespace wssl
