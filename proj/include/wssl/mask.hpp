// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Irregular stroke masks (quick-draw style) with a missing-area filter.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "wssl/error.hpp"
#include "wssl/image.hpp"
#include "wssl/rng.hpp"

namespace wssl {

/// H x W grid, true = missing pixel.
struct Mask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> cells;

    Mask() = default;
    Mask(std::size_t h, std::size_t w, bool fill = false) : height(h), width(w), cells(h * w, fill ? 1 : 0) {}

    bool missing(std::size_t y, std::size_t x) const { return cells[y * width + x] != 0; }
    void set(std::size_t y, std::size_t x, bool v) { cells[y * width + x] = v ? 1 : 0; }

    bool operator==(const Mask&) const = default;
};

struct IntRange {
    int lo = 0;
    int hi = 0;

    bool valid() const { return lo <= hi; }
    bool operator==(const IntRange&) const = default;
};

struct MaskSpec {
    IntRange strokes{4, 12};
    IntRange thickness{8, 24};
    IntRange segment_length{10, 40};
    IntRange segments_per_stroke{4, 12};
    double fraction_low = 0.30;
    double fraction_high = 0.50;
    int max_rejections = 200;
    // Stroke thickness and segment length are given in pixels at this image
    // side and scaled by min(h, w) / reference_size; 0 disables scaling.
    int reference_size = 224;

    double scale_for(std::size_t h, std::size_t w) const {
        if (reference_size <= 0) return 1.0;
        return static_cast<double>(std::min(h, w)) / static_cast<double>(reference_size);
    }

    void validate() const {
        if (!(fraction_low > 0.0 && fraction_high <= 1.0 && fraction_low < fraction_high))
            throw ArgumentError("mask fraction bounds must satisfy 0 < low < high <= 1");
        if (!strokes.valid() || strokes.lo < 1) throw ArgumentError("mask strokes range invalid");
        if (!thickness.valid() || thickness.lo < 1) throw ArgumentError("mask thickness range invalid");
        if (!segment_length.valid() || segment_length.lo < 1) throw ArgumentError("mask segment_length range invalid");
        if (!segments_per_stroke.valid() || segments_per_stroke.lo < 1)
            throw ArgumentError("mask segments_per_stroke range invalid");
        if (max_rejections < 1) throw ArgumentError("mask max_rejections must be positive");
        if (reference_size < 0) throw ArgumentError("mask reference_size must be >= 0");
    }
};

inline double missing_fraction(const Mask& m) {
    if (m.cells.empty()) return 0.0;
    const auto count = std::count_if(m.cells.begin(), m.cells.end(), [](std::uint8_t c) { return c != 0; });
    return static_cast<double>(count) / static_cast<double>(m.cells.size());
}

namespace detail {

// Marks every cell whose centre lies within `radius` of segment p0-p1.
inline void stamp_segment(Mask& m, double x0, double y0, double x1, double y1, double radius) {
    const auto lo_x = static_cast<std::ptrdiff_t>(std::floor(std::min(x0, x1) - radius));
    const auto hi_x = static_cast<std::ptrdiff_t>(std::ceil(std::max(x0, x1) + radius));
    const auto lo_y = static_cast<std::ptrdiff_t>(std::floor(std::min(y0, y1) - radius));
    const auto hi_y = static_cast<std::ptrdiff_t>(std::ceil(std::max(y0, y1) + radius));
    const double dx = x1 - x0, dy = y1 - y0;
    const double len2 = dx * dx + dy * dy;
    const double r2 = radius * radius;
    for (auto y = std::max<std::ptrdiff_t>(lo_y, 0); y <= std::min<std::ptrdiff_t>(hi_y, m.height - 1); ++y)
        for (auto x = std::max<std::ptrdiff_t>(lo_x, 0); x <= std::min<std::ptrdiff_t>(hi_x, m.width - 1); ++x) {
            const double px = static_cast<double>(x), py = static_cast<double>(y);
            double t = len2 > 0.0 ? ((px - x0) * dx + (py - y0) * dy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            const double ex = x0 + t * dx - px, ey = y0 + t * dy - py;
            if (ex * ex + ey * ey <= r2) m.set(static_cast<std::size_t>(y), static_cast<std::size_t>(x), true);
        }
}

inline Mask draw_strokes(std::size_t h, std::size_t w, const MaskSpec& spec, Rng& rng) {
    Mask m(h, w);
    const double max_x = static_cast<double>(w - 1), max_y = static_cast<double>(h - 1);
    const double scale = spec.scale_for(h, w);
    const int strokes = rng.uniform_int(spec.strokes.lo, spec.strokes.hi);
    for (int s = 0; s < strokes; ++s) {
        double x = rng.uniform(0.0, max_x);
        double y = rng.uniform(0.0, max_y);
        double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double radius = 0.5 * scale * rng.uniform_int(spec.thickness.lo, spec.thickness.hi);
        const int segments = rng.uniform_int(spec.segments_per_stroke.lo, spec.segments_per_stroke.hi);
        for (int k = 0; k < segments; ++k) {
            heading += rng.uniform(-std::numbers::pi / 3.0, std::numbers::pi / 3.0);
            const double len = scale * rng.uniform_int(spec.segment_length.lo, spec.segment_length.hi);
            const double nx = std::clamp(x + len * std::cos(heading), 0.0, max_x);
            const double ny = std::clamp(y + len * std::sin(heading), 0.0, max_y);
            stamp_segment(m, x, y, nx, ny, radius);
            x = nx;
            y = ny;
        }
    }
    return m;
}

} // namespace detail

/// Rejection-samples whole stroke masks until the missing fraction falls in
/// [spec.fraction_low, spec.fraction_high].
inline Mask generate_mask(std::size_t h, std::size_t w, const MaskSpec& spec, Rng& rng) {
    if (h < 32 || w < 32) throw ArgumentError("generate_mask requires h, w >= 32");
    spec.validate();
    for (int attempt = 0; attempt < spec.max_rejections; ++attempt) {
        Mask m = detail::draw_strokes(h, w, spec, rng);
        const double f = missing_fraction(m);
        if (f >= spec.fraction_low && f <= spec.fraction_high) return m;
    }
    throw ArgumentError("generate_mask: no mask within fraction bounds after " + std::to_string(spec.max_rejections) +
                        " attempts");
}

/// Missing pixels are replaced by `fill` on all channels; the rest is copied.
inline Image apply_mask(const Image& img, const Mask& m, float fill = 0.0f) {
    if (img.height != m.height || img.width != m.width) throw ShapeError("apply_mask: mask and image dimensions differ");
    if (!(fill >= 0.0f && fill <= 1.0f)) throw ArgumentError("apply_mask: fill must lie in [0, 1]");
    Image out = img;
    for (std::size_t y = 0; y < m.height; ++y)
        for (std::size_t x = 0; x < m.width; ++x)
            if (m.missing(y, x))
                for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = fill;
    return out;
}

// PGM (P5, 8 bit): 255 = missing, 0 = known. On read, values >= 128 are missing.

inline Mask read_pgm(std::istream& in) {
    if (detail::read_pnm_token(in) != "P5") throw IoError("not a binary PGM (P5) stream");
    const auto w = detail::parse_pnm_int(detail::read_pnm_token(in), "width");
    const auto h = detail::parse_pnm_int(detail::read_pnm_token(in), "height");
    const auto maxval = detail::parse_pnm_int(detail::read_pnm_token(in), "maxval");
    if (maxval != 255) throw IoError("only 8-bit PGM (maxval 255) is supported");
    std::vector<unsigned char> raw(w * h);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw IoError("truncated PGM payload");
    Mask m(h, w);
    for (std::size_t i = 0; i < raw.size(); ++i) m.cells[i] = raw[i] >= 128 ? 1 : 0;
    return m;
}

inline Mask read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_pgm(in);
}

inline void write_pgm(std::ostream& out, const Mask& m) {
    out << "P5\n" << m.width << ' ' << m.height << "\n255\n";
    std::vector<char> raw(m.cells.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<char>(m.cells[i] ? 255 : 0);
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
}

inline void write_pgm(const std::filesystem::path& path, const Mask& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_pgm(out, m);
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace wssl
