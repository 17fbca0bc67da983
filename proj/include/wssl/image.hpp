// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// RGB images in [0, 1], the three pretext augmentations and sample
// preparation (resize + random crop).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "wssl/error.hpp"
#include "wssl/rng.hpp"
#include "wssl/tensor.hpp"

namespace wssl {

/// H x W x 3 floats, row-major, channels innermost (RGB).
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), pixels(h * w * 3, fill) {}

    static Image from_pixels(std::size_t h, std::size_t w, std::vector<float> px) {
        if (px.size() != h * w * 3) throw ShapeError("image pixel buffer does not match " + std::to_string(h) + "x" + std::to_string(w) + "x3");
        Image img;
        img.height = h;
        img.width = w;
        img.pixels = std::move(px);
        return img;
    }

    float& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
    float at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }

    bool same_shape(const Image& o) const { return height == o.height && width == o.width; }
    bool operator==(const Image&) const = default;
};

inline void require_same_shape(const Image& a, const Image& b, std::string_view op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": image shapes differ (" + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" + std::to_string(b.width) + ")");
}

template <class T = float>
BasicTensor<T> to_tensor(const Image& img, bool requires_grad = false) {
    return BasicTensor<T>::from({img.height, img.width, 3}, std::vector<T>(img.pixels.begin(), img.pixels.end()),
                                requires_grad);
}

/// Values are clamped into [0, 1].
template <class T>
Image to_image(const BasicTensor<T>& t) {
    if (t.rank() != 3 || t.dim(2) != 3) throw ShapeError("to_image expects H x W x 3, got " + to_string(t.shape()));
    Image img(t.dim(0), t.dim(1));
    auto d = t.data();
    for (std::size_t i = 0; i < d.size(); ++i) img.pixels[i] = std::clamp(static_cast<float>(d[i]), 0.0f, 1.0f);
    return img;
}

// ---------------------------------------------------------------------------
// PPM (P6, 8 bit)

namespace detail {

inline std::string read_pnm_token(std::istream& in) {
    std::string tok;
    char c;
    while (in.get(c)) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            tok.push_back(c);
            break;
        }
    }
    while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) tok.push_back(c);
    return tok;
}

inline std::size_t parse_pnm_int(const std::string& tok, std::string_view what) {
    try {
        std::size_t pos = 0;
        auto v = std::stoul(tok, &pos);
        if (pos != tok.size()) throw IoError("");
        return v;
    } catch (...) {
        throw IoError("malformed " + std::string(what) + " in PNM header: '" + tok + "'");
    }
}

inline std::uint8_t quantize_u8(float v) {
    // Round half up.
    const double q = std::floor(static_cast<double>(std::clamp(v, 0.0f, 1.0f)) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
}

} // namespace detail

inline Image read_ppm(std::istream& in) {
    if (detail::read_pnm_token(in) != "P6") throw IoError("not a binary PPM (P6) stream");
    const auto w = detail::parse_pnm_int(detail::read_pnm_token(in), "width");
    const auto h = detail::parse_pnm_int(detail::read_pnm_token(in), "height");
    const auto maxval = detail::parse_pnm_int(detail::read_pnm_token(in), "maxval");
    if (maxval != 255) throw IoError("only 8-bit PPM (maxval 255) is supported");
    if (w == 0 || h == 0) throw IoError("PPM has zero size");
    std::vector<unsigned char> raw(w * h * 3);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw IoError("truncated PPM payload");
    Image img(h, w);
    for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = static_cast<float>(raw[i]) / 255.0f;
    return img;
}

inline Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_ppm(in);
}

inline void write_ppm(std::ostream& out, const Image& img) {
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    std::vector<char> raw(img.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<char>(detail::quantize_u8(img.pixels[i]));
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
}

inline void write_ppm(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_ppm(out, img);
    if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Augmentation primitives

/// Counter-clockwise rotation by k * 90 degrees.
inline Image rotate90(const Image& img, int k) {
    if (k < 0 || k > 3) throw ArgumentError("rotate90: k must be in [0, 4), got " + std::to_string(k));
    if (k % 2 == 1 && img.height != img.width) throw ShapeError("rotate90: odd k requires a square image");
    if (k == 0) return img;
    const std::size_t H = img.height, W = img.width;
    Image out = k % 2 ? Image(W, H) : Image(H, W);
    for (std::size_t y = 0; y < out.height; ++y)
        for (std::size_t x = 0; x < out.width; ++x) {
            std::size_t sy = 0, sx = 0;
            switch (k) {
            case 1: sy = x; sx = W - 1 - y; break;
            case 2: sy = H - 1 - y; sx = W - 1 - x; break;
            default: sy = H - 1 - x; sx = y; break;
            }
            for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    return out;
}

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline double luma(const Image& img, std::size_t y, std::size_t x) {
    return kLumaR * img.at(y, x, 0) + kLumaG * img.at(y, x, 1) + kLumaB * img.at(y, x, 2);
}

inline Image to_grayscale(const Image& img) {
    Image out(img.height, img.width);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) {
            const auto g = static_cast<float>(luma(img, y, x));
            for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = g;
        }
    return out;
}

/// (1 - factor) * a + factor * b, clamped to [0, 1]. Evaluated in double so
/// that the level factors {0, 0.25, 0.75, 1} reproduce exact endpoints.
inline Image blend(const Image& a, const Image& b, double factor) {
    require_same_shape(a, b, "blend");
    Image out(a.height, a.width);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        const double v = (1.0 - factor) * a.pixels[i] + factor * b.pixels[i];
        out.pixels[i] = std::clamp(static_cast<float>(v), 0.0f, 1.0f);
    }
    return out;
}

namespace detail {

inline void require_unit_factor(double factor, std::string_view op) {
    if (!(factor >= 0.0 && factor <= 1.0))
        throw ArgumentError(std::string(op) + ": factor must lie in [0, 1], got " + std::to_string(factor));
}

} // namespace detail

/// factor 1 keeps the image, factor 0 yields its grayscale version.
inline Image adjust_saturation(const Image& img, double factor) {
    detail::require_unit_factor(factor, "adjust_saturation");
    return blend(to_grayscale(img), img, factor);
}

/// Per-channel smoothing with [[1,1,1],[1,5,1],[1,1,1]] / 13; the 1-pixel
/// border is copied unchanged.
inline Image smooth(const Image& img) {
    Image out = img;
    if (img.height < 3 || img.width < 3) return out;
    for (std::size_t y = 1; y + 1 < img.height; ++y)
        for (std::size_t x = 1; x + 1 < img.width; ++x)
            for (std::size_t c = 0; c < 3; ++c) {
                double acc = 4.0 * img.at(y, x, c);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) acc += img.at(y + dy, x + dx, c);
                out.at(y, x, c) = static_cast<float>(acc / 13.0);
            }
    return out;
}

/// factor 1 keeps the image, factor 0 yields the smoothed version.
inline Image adjust_sharpness(const Image& img, double factor) {
    detail::require_unit_factor(factor, "adjust_sharpness");
    return blend(smooth(img), img, factor);
}

/// Bilinear resampling with half-pixel centres.
inline Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w) {
    if (out_h == 0 || out_w == 0) throw ArgumentError("resize_bilinear: zero target size");
    if (out_h == img.height && out_w == img.width) return img;
    Image out(out_h, out_w);
    const double sy = static_cast<double>(img.height) / static_cast<double>(out_h);
    const double sx = static_cast<double>(img.width) / static_cast<double>(out_w);
    auto coord = [](double dst, double scale, std::size_t n, std::size_t& i0, std::size_t& i1, double& f) {
        double s = std::clamp((dst + 0.5) * scale - 0.5, 0.0, static_cast<double>(n - 1));
        i0 = static_cast<std::size_t>(std::floor(s));
        i1 = std::min(i0 + 1, n - 1);
        f = s - static_cast<double>(i0);
    };
    for (std::size_t y = 0; y < out_h; ++y) {
        std::size_t y0, y1;
        double fy;
        coord(static_cast<double>(y), sy, img.height, y0, y1, fy);
        for (std::size_t x = 0; x < out_w; ++x) {
            std::size_t x0, x1;
            double fx;
            coord(static_cast<double>(x), sx, img.width, x0, x1, fx);
            for (std::size_t c = 0; c < 3; ++c) {
                const double a = img.at(y0, x0, c), b = img.at(y0, x1, c);
                const double d = img.at(y1, x0, c), e = img.at(y1, x1, c);
                const double top = a + (b - a) * fx;
                const double bot = d + (e - d) * fx;
                out.at(y, x, c) = std::clamp(static_cast<float>(top + (bot - top) * fy), 0.0f, 1.0f);
            }
        }
    }
    return out;
}

inline Image crop(const Image& img, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
    if (top + h > img.height || left + w > img.width) throw ShapeError("crop window exceeds image bounds");
    Image out(h, w);
    for (std::size_t y = 0; y < h; ++y)
        std::copy_n(&img.pixels[((top + y) * img.width + left) * 3], w * 3, &out.pixels[y * w * 3]);
    return out;
}

/// Resize to resize_to x resize_to, then take a uniformly random square crop
/// of side crop_to.
inline Image prepare_sample(const Image& img, Rng& rng, std::size_t resize_to, std::size_t crop_to) {
    if (crop_to == 0 || crop_to > resize_to)
        throw ArgumentError("prepare_sample: crop " + std::to_string(crop_to) + " larger than resize " +
                            std::to_string(resize_to));
    Image resized = resize_bilinear(img, resize_to, resize_to);
    const int slack = static_cast<int>(resize_to - crop_to);
    const auto top = static_cast<std::size_t>(rng.uniform_int(0, slack));
    const auto left = static_cast<std::size_t>(rng.uniform_int(0, slack));
    if (crop_to == resize_to) return resized;
    return crop(resized, top, left, crop_to, crop_to);
}

/// Deterministic centre crop, used for evaluation.
inline Image prepare_center(const Image& img, std::size_t resize_to, std::size_t crop_to) {
    if (crop_to == 0 || crop_to > resize_to) throw ArgumentError("prepare_center: crop larger than resize");
    Image resized = resize_bilinear(img, resize_to, resize_to);
    const std::size_t off = (resize_to - crop_to) / 2;
    return crop(resized, off, off, crop_to, crop_to);
}

// ---------------------------------------------------------------------------
// Pretext tasks

enum class PretextTask { rotation, saturation, sharpness };

inline constexpr std::array<PretextTask, 3> kAllTasks = {PretextTask::rotation, PretextTask::saturation,
                                                         PretextTask::sharpness};

inline std::string_view task_name(PretextTask t) {
    switch (t) {
    case PretextTask::rotation: return "rotation";
    case PretextTask::saturation: return "saturation";
    case PretextTask::sharpness: return "sharpness";
    }
    return "?";
}

inline std::optional<PretextTask> parse_task(std::string_view name) {
    for (auto t : kAllTasks)
        if (task_name(t) == name) return t;
    return std::nullopt;
}

inline constexpr std::size_t kNumLevels = 4;

/// A pretext classification problem: which of four discrete levels of one
/// augmentation was applied. Rotation levels are degrees, the others factors.
struct PretextTaskSpec {
    PretextTask task = PretextTask::rotation;
    std::array<double, kNumLevels> levels{};

    static PretextTaskSpec of(PretextTask task) {
        if (task == PretextTask::rotation) return {task, {0.0, 90.0, 180.0, 270.0}};
        return {task, {0.0, 0.25, 0.75, 1.0}};
    }

    /// Index of the level that leaves the image unchanged.
    std::size_t identity_level() const { return task == PretextTask::rotation ? 0 : kNumLevels - 1; }

    bool operator==(const PretextTaskSpec&) const = default;
};

inline std::vector<PretextTaskSpec> specs_for(const std::vector<PretextTask>& tasks) {
    std::vector<PretextTaskSpec> out;
    for (auto t : tasks) out.push_back(PretextTaskSpec::of(t));
    return out;
}

inline Image apply_level(const Image& img, const PretextTaskSpec& spec, std::size_t level) {
    if (level >= kNumLevels) throw ArgumentError("pretext level out of range");
    const double v = spec.levels[level];
    switch (spec.task) {
    case PretextTask::rotation: return rotate90(img, static_cast<int>(std::lround(v / 90.0)) % 4);
    case PretextTask::saturation: return adjust_saturation(img, v);
    case PretextTask::sharpness: return adjust_sharpness(img, v);
    }
    return img;
}

struct PretextSample {
    Image augmented;
    std::map<PretextTask, std::size_t> labels;
};

namespace detail {

inline void validate_task_list(const std::vector<PretextTaskSpec>& tasks) {
    if (tasks.empty()) throw ArgumentError("pretext task list is empty");
    if (tasks.size() > 3) throw ArgumentError("at most three pretext tasks are supported");
    for (std::size_t i = 0; i < tasks.size(); ++i)
        for (std::size_t j = i + 1; j < tasks.size(); ++j)
            if (tasks[i].task == tasks[j].task)
                throw ArgumentError("duplicate pretext task: " + std::string(task_name(tasks[i].task)));
}

inline int order_rank(PretextTask t) {
    switch (t) {
    case PretextTask::saturation: return 0;
    case PretextTask::sharpness: return 1;
    case PretextTask::rotation: return 2;
    }
    return 3;
}

} // namespace detail

/// Applies the given levels (one per task, aligned with `tasks`) in the fixed
/// order saturation, sharpness, rotation.
inline PretextSample apply_levels(const Image& img, const std::vector<PretextTaskSpec>& tasks,
                                  const std::vector<std::size_t>& levels) {
    detail::validate_task_list(tasks);
    if (levels.size() != tasks.size()) throw ArgumentError("one level per task is required");
    std::vector<std::size_t> order(tasks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detail::order_rank(tasks[a].task) < detail::order_rank(tasks[b].task);
    });
    PretextSample sample{img, {}};
    for (auto i : order) {
        sample.augmented = apply_level(sample.augmented, tasks[i], levels[i]);
        sample.labels[tasks[i].task] = levels[i];
    }
    return sample;
}

/// Draws one uniform level per task (in list order) and applies them.
inline PretextSample pretext_sample(const Image& img, const std::vector<PretextTaskSpec>& tasks, Rng& rng) {
    detail::validate_task_list(tasks);
    std::vector<std::size_t> levels;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        levels.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(kNumLevels) - 1)));
    return apply_levels(img, tasks, levels);
}

} // namespace wssl
