// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: JSON document -> validated RunConfig with defaults.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wssl/image.hpp"
#include "wssl/losses.hpp"
#include "wssl/mask.hpp"
#include "wssl/model.hpp"
#include "wssl/optim.hpp"
#include "wssl/synthetic.hpp"
#include "wssl/train.hpp"

namespace wssl {

struct DataConfig {
    std::string image_dir;  // empty: procedural toy images
    std::size_t resize_to = 36;
    std::size_t crop_to = 32;
    std::size_t synthetic_count = 16;
    std::size_t holdout_count = 4;
};

struct RunConfig {
    DataConfig data;
    TaskWeights weights{{{PretextTask::rotation, 1.0}}};
    UNetConfig model;
    TrainHyper train;
    LossOptions loss;
    MaskSpec masks;
    float mask_fill = 0.0f;
    std::uint64_t seed = 0;
    std::string output_dir = "wssl_out";

    DataOptions data_options() const { return {data.resize_to, data.crop_to}; }

    /// Training hyperparameters with the run seed folded in.
    TrainHyper hyper() const {
        TrainHyper h = train;
        h.seed = seed;
        return h;
    }
};

struct ConfigIssue {
    std::string path;
    std::string message;
};

struct ConfigResult {
    std::optional<RunConfig> config;
    std::vector<ConfigIssue> issues;

    bool ok() const { return config.has_value(); }
};

namespace detail {

class ConfigReader {
public:
    std::vector<ConfigIssue> issues;

    void issue(std::string path, std::string message) { issues.push_back({std::move(path), std::move(message)}); }

    // Reports keys of `obj` not listed in `known`.
    void check_keys(const nlohmann::json& obj, const std::string& path, std::initializer_list<const char*> known) {
        for (const auto& [key, value] : obj.items()) {
            if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
                issue(join(path, key), "unknown key");
        }
    }

    const nlohmann::json* section(const nlohmann::json& doc, const std::string& key) {
        if (!doc.contains(key)) return nullptr;
        const auto& s = doc.at(key);
        if (!s.is_object()) {
            issue(key, "must be an object");
            return nullptr;
        }
        return &s;
    }

    template <class U>
    void read(const nlohmann::json* obj, const std::string& path, const char* key, U& out) {
        if (!obj || !obj->contains(key)) return;
        const auto& v = obj->at(key);
        const auto full = join(path, key);
        if constexpr (std::is_same_v<U, std::string>) {
            if (!v.is_string()) return issue(full, "must be a string");
            out = v.template get<std::string>();
        } else if constexpr (std::is_floating_point_v<U>) {
            if (!v.is_number()) return issue(full, "must be a number");
            out = v.template get<U>();
        } else {
            if (!v.is_number_integer()) return issue(full, "must be an integer");
            if constexpr (std::is_unsigned_v<U>) {
                if (v.is_number_unsigned() || v.template get<long long>() >= 0) out = v.template get<U>();
                else issue(full, "must be non-negative");
            } else {
                out = v.template get<U>();
            }
        }
    }

    void read_range(const nlohmann::json* obj, const std::string& path, const char* key, IntRange& out) {
        if (!obj || !obj->contains(key)) return;
        const auto& v = obj->at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
            return issue(join(path, key), "must be a [low, high] integer pair");
        out = {v[0].get<int>(), v[1].get<int>()};
        if (out.lo > out.hi || out.lo < 1) issue(join(path, key), "requires 1 <= low <= high");
    }

    static std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
};

} // namespace detail

/// Validates a parsed JSON document, filling defaults. Returns every
/// violation found rather than stopping at the first.
inline ConfigResult validate_config(const nlohmann::json& doc) {
    detail::ConfigReader r;
    RunConfig cfg;
    if (!doc.is_object()) {
        r.issue("", "configuration must be a JSON object");
        return {std::nullopt, r.issues};
    }
    r.check_keys(doc, "", {"data", "tasks", "model", "train", "loss", "masks", "seed", "output_dir"});

    if (const auto* d = r.section(doc, "data")) {
        r.check_keys(*d, "data", {"image_dir", "resize_to", "crop_to", "synthetic_count", "holdout_count"});
        r.read(d, "data", "image_dir", cfg.data.image_dir);
        r.read(d, "data", "resize_to", cfg.data.resize_to);
        r.read(d, "data", "crop_to", cfg.data.crop_to);
        r.read(d, "data", "synthetic_count", cfg.data.synthetic_count);
        r.read(d, "data", "holdout_count", cfg.data.holdout_count);
    }

    if (const auto* t = r.section(doc, "tasks")) {
        r.check_keys(*t, "tasks", {"list", "weights"});
        std::vector<PretextTask> list;
        bool list_ok = true;
        if (t->contains("list")) {
            const auto& l = t->at("list");
            if (!l.is_array() || l.empty() || l.size() > 3) {
                r.issue("tasks.list", "must be an array of 1-3 task names");
                list_ok = false;
            } else {
                for (const auto& name : l) {
                    auto task = name.is_string() ? parse_task(name.get<std::string>()) : std::nullopt;
                    if (!task) {
                        r.issue("tasks.list", "unknown task " + name.dump());
                        list_ok = false;
                    } else if (std::find(list.begin(), list.end(), *task) != list.end()) {
                        r.issue("tasks.list", "duplicate task " + name.dump());
                        list_ok = false;
                    } else {
                        list.push_back(*task);
                    }
                }
            }
        }
        TaskWeights weights;
        bool weights_ok = true;
        if (t->contains("weights")) {
            const auto& w = t->at("weights");
            if (!w.is_object() || w.empty()) {
                r.issue("tasks.weights", "must be an object mapping task names to weights");
                weights_ok = false;
            } else {
                for (const auto& [name, value] : w.items()) {
                    auto task = parse_task(name);
                    if (!task) {
                        r.issue("tasks.weights." + name, "unknown task");
                        weights_ok = false;
                    } else if (!value.is_number()) {
                        r.issue("tasks.weights." + name, "must be a number");
                        weights_ok = false;
                    } else {
                        weights.weights[*task] = value.get<double>();
                    }
                }
            }
        } else if (list_ok && !list.empty()) {
            for (auto task : list) weights.weights[task] = 1.0 / static_cast<double>(list.size());
        }
        if (list_ok && weights_ok && !weights.weights.empty()) {
            try {
                weights.validate();
            } catch (const Error& e) {
                r.issue("tasks.weights", e.what());
                weights_ok = false;
            }
            if (!list.empty()) {
                std::set<PretextTask> a(list.begin(), list.end());
                auto keys = weights.tasks();
                std::set<PretextTask> b(keys.begin(), keys.end());
                if (a != b) {
                    r.issue("tasks", "tasks.list and tasks.weights name different tasks");
                    weights_ok = false;
                }
            }
            if (weights_ok) cfg.weights = weights;
        }
    }

    if (const auto* m = r.section(doc, "model")) {
        r.check_keys(*m, "model", {"depth", "base_channels", "input_size"});
        r.read(m, "model", "depth", cfg.model.depth);
        r.read(m, "model", "base_channels", cfg.model.base_channels);
        r.read(m, "model", "input_size", cfg.model.input_size);
    }

    if (const auto* t = r.section(doc, "train")) {
        r.check_keys(*t, "train", {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "epochs_pretext",
                                   "epochs_downstream"});
        r.read(t, "train", "learning_rate", cfg.train.learning_rate);
        r.read(t, "train", "beta1", cfg.train.beta1);
        r.read(t, "train", "beta2", cfg.train.beta2);
        r.read(t, "train", "epsilon", cfg.train.epsilon);
        r.read(t, "train", "batch_size", cfg.train.batch_size);
        r.read(t, "train", "epochs_pretext", cfg.train.epochs_pretext);
        r.read(t, "train", "epochs_downstream", cfg.train.epochs_downstream);
    }

    if (const auto* l = r.section(doc, "loss")) {
        r.check_keys(*l, "loss", {"alpha", "a", "ssim"});
        r.read(l, "loss", "alpha", cfg.loss.wssl.alpha);
        r.read(l, "loss", "a", cfg.loss.logcosh.a);
        if (l->contains("ssim")) {
            const auto& s = l->at("ssim");
            if (!s.is_object()) {
                r.issue("loss.ssim", "must be an object");
            } else {
                r.check_keys(s, "loss.ssim", {"window_size", "sigma", "k1", "k2", "dynamic_range"});
                r.read(&s, "loss.ssim", "window_size", cfg.loss.ssim.window_size);
                r.read(&s, "loss.ssim", "sigma", cfg.loss.ssim.sigma);
                r.read(&s, "loss.ssim", "k1", cfg.loss.ssim.k1);
                r.read(&s, "loss.ssim", "k2", cfg.loss.ssim.k2);
                r.read(&s, "loss.ssim", "dynamic_range", cfg.loss.ssim.dynamic_range);
            }
        }
    }

    if (const auto* m = r.section(doc, "masks")) {
        r.check_keys(*m, "masks", {"strokes", "thickness", "segment_length", "segments_per_stroke", "fraction_bounds",
                                   "max_rejections", "reference_size", "fill"});
        r.read_range(m, "masks", "strokes", cfg.masks.strokes);
        r.read_range(m, "masks", "thickness", cfg.masks.thickness);
        r.read_range(m, "masks", "segment_length", cfg.masks.segment_length);
        r.read_range(m, "masks", "segments_per_stroke", cfg.masks.segments_per_stroke);
        if (m->contains("fraction_bounds")) {
            const auto& fb = m->at("fraction_bounds");
            if (!fb.is_array() || fb.size() != 2 || !fb[0].is_number() || !fb[1].is_number()) {
                r.issue("masks.fraction_bounds", "must be a [low, high] number pair");
            } else {
                cfg.masks.fraction_low = fb[0].get<double>();
                cfg.masks.fraction_high = fb[1].get<double>();
            }
        }
        r.read(m, "masks", "max_rejections", cfg.masks.max_rejections);
        r.read(m, "masks", "reference_size", cfg.masks.reference_size);
        r.read(m, "masks", "fill", cfg.mask_fill);
    }

    if (doc.contains("seed")) {
        const auto& s = doc.at("seed");
        if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<long long>() < 0))
            r.issue("seed", "must be a non-negative integer");
        else
            cfg.seed = s.get<std::uint64_t>();
    }
    r.read(&doc, "", "output_dir", cfg.output_dir);

    // Cross-field invariants.
    auto check = [&](const std::string& path, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            r.issue(path, e.what());
        }
    };
    if (cfg.model.depth < 1 || cfg.model.depth > 8) r.issue("model.depth", "must lie in [1, 8]");
    else if (cfg.model.base_channels < 1) r.issue("model.base_channels", "must be >= 1");
    else check("model.input_size", [&] { cfg.model.validate(); });
    check("train", [&] { cfg.train.validate(); });
    check("loss.alpha", [&] { cfg.loss.wssl.validate(); });
    check("loss.a", [&] { cfg.loss.logcosh.validate(); });
    check("loss.ssim", [&] { cfg.loss.ssim.validate(); });
    check("masks", [&] { cfg.masks.validate(); });
    if (!(cfg.mask_fill >= 0.0f && cfg.mask_fill <= 1.0f)) r.issue("masks.fill", "must lie in [0, 1]");
    if (cfg.data.crop_to > cfg.data.resize_to) r.issue("data.crop_to", "must not exceed data.resize_to");
    if (cfg.model.input_size > 0 && cfg.data.crop_to != static_cast<std::size_t>(cfg.model.input_size))
        r.issue("data.crop_to", "must equal model.input_size (" + std::to_string(cfg.model.input_size) + ")");
    if (cfg.model.input_size < 32) r.issue("model.input_size", "must be >= 32 for mask generation");
    if (cfg.loss.ssim.window_size > cfg.model.input_size)
        r.issue("loss.ssim.window_size", "larger than model.input_size");
    if (cfg.data.image_dir.empty()) {
        if (cfg.data.synthetic_count < static_cast<std::size_t>(std::max(cfg.train.batch_size, 1)))
            r.issue("data.synthetic_count", "must be at least train.batch_size");
    } else {
        std::error_code ec;
        if (!std::filesystem::is_directory(cfg.data.image_dir, ec))
            r.issue("data.image_dir", "directory does not exist: " + cfg.data.image_dir);
    }
    if (cfg.output_dir.empty()) r.issue("output_dir", "must not be empty");

    if (!r.issues.empty()) return {std::nullopt, r.issues};
    return {cfg, {}};
}

inline ConfigResult validate_config_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        return {std::nullopt, {{"", std::string("invalid JSON: ") + e.what()}}};
    }
    return validate_config(doc);
}

/// Originals of the PPM files in a directory, sorted by file name. Files named
/// *.masked.ppm / *.recon.ppm are outputs of `inpaint` and are skipped.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".ppm") continue;
        const auto stem = entry.path().stem().string();
        if (stem.ends_with(".masked") || stem.ends_with(".recon")) continue;
        out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct Datasets {
    std::vector<Image> train;
    std::vector<Image> holdout;
};

/// Training and held-out images for a run. From a directory, the last
/// holdout_count files (by name) are held out.
inline Datasets load_datasets(const RunConfig& cfg) {
    Datasets ds;
    if (cfg.data.image_dir.empty()) {
        ds.train = make_synthetic_dataset(cfg.data.synthetic_count, cfg.data.resize_to, derive_seed(cfg.seed, 100));
        ds.holdout = make_synthetic_dataset(cfg.data.holdout_count, cfg.data.resize_to, derive_seed(cfg.seed, 101));
        return ds;
    }
    auto files = list_images(cfg.data.image_dir);
    if (files.size() <= cfg.data.holdout_count)
        throw ArgumentError("data.image_dir has " + std::to_string(files.size()) + " images, need more than holdout_count");
    const auto split = files.size() - cfg.data.holdout_count;
    for (std::size_t i = 0; i < files.size(); ++i) {
        Image img = read_ppm(files[i]);
        if (img.height < 8 || img.width < 8) throw ArgumentError("image smaller than 8x8: " + files[i].string());
        (i < split ? ds.train : ds.holdout).push_back(std::move(img));
    }
    return ds;
}

} // namespace wssl
