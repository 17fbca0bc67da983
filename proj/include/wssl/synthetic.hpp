// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Procedural toy images: gradients, circles, stripes and seeded noise. Every
// image has a bright-top / dark-bottom layout so that its upright orientation
// is recoverable, which the rotation task depends on.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "wssl/image.hpp"
#include "wssl/rng.hpp"

namespace wssl {

enum class SyntheticKind { gradient, circles, stripes, noise };

namespace detail {

using Rgb = std::array<double, 3>;

inline Rgb random_color(Rng& rng) { return {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)}; }

inline Rgb mix(const Rgb& a, const Rgb& b, double t) {
    return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

} // namespace detail

inline Image make_synthetic_image(SyntheticKind kind, std::size_t size, Rng& rng) {
    using detail::Rgb;
    const double n = static_cast<double>(size);
    const Rgb sky = detail::random_color(rng);
    const Rgb ground = detail::mix(detail::random_color(rng), {0.0, 0.0, 0.0}, 0.6);
    const double horizon = rng.uniform(0.7, 0.85) * n;
    const Rgb a = detail::random_color(rng);
    const Rgb b = detail::random_color(rng);

    struct Circle {
        double cx, cy, r;
        Rgb color;
    };
    std::vector<Circle> circles;
    if (kind == SyntheticKind::circles) {
        const int count = rng.uniform_int(2, 4);
        for (int i = 0; i < count; ++i)
            circles.push_back({rng.uniform(0.15, 0.85) * n, rng.uniform(0.1, 0.6) * n, rng.uniform(0.08, 0.22) * n,
                               detail::random_color(rng)});
    }
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double freq = rng.uniform(2.0, 5.0) * 2.0 * std::numbers::pi / n;
    const double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);
    // Value noise: a coarse random lattice, bilinearly interpolated.
    constexpr std::size_t lattice = 5;
    std::vector<double> coarse(lattice * lattice * 3);
    for (auto& v : coarse) v = rng.uniform(-0.3, 0.3);
    auto noise_at = [&](double fy, double fx, std::size_t k) {
        const double gy = fy / n * (lattice - 1), gx2 = fx / n * (lattice - 1);
        const auto y0 = std::min(static_cast<std::size_t>(gy), lattice - 2);
        const auto x0 = std::min(static_cast<std::size_t>(gx2), lattice - 2);
        const double ty = gy - static_cast<double>(y0), tx = gx2 - static_cast<double>(x0);
        auto c = [&](std::size_t yy, std::size_t xx) { return coarse[(yy * lattice + xx) * 3 + k]; };
        const double top = c(y0, x0) + (c(y0, x0 + 1) - c(y0, x0)) * tx;
        const double bot = c(y0 + 1, x0) + (c(y0 + 1, x0 + 1) - c(y0 + 1, x0)) * tx;
        return top + (bot - top) * ty;
    };

    Image img(size, size);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const double fy = static_cast<double>(y), fx = static_cast<double>(x);
            // Vertical light falloff shared by every kind.
            const double light = 1.0 - 0.55 * fy / n;
            Rgb c{};
            switch (kind) {
            case SyntheticKind::gradient: {
                const double t = std::clamp(0.5 + 0.5 * (gx * (fx / n - 0.5) + gy * (fy / n - 0.5)) * 2.0, 0.0, 1.0);
                c = detail::mix(detail::mix(a, b, t), sky, 0.3);
                break;
            }
            case SyntheticKind::circles: {
                c = sky;
                for (const auto& ci : circles) {
                    const double d = std::hypot(fx - ci.cx, fy - ci.cy);
                    if (d <= ci.r) c = ci.color;
                }
                break;
            }
            case SyntheticKind::stripes: {
                const double u = fx * std::cos(angle) + fy * std::sin(angle);
                c = detail::mix(a, b, 0.5 + 0.5 * std::sin(freq * u));
                break;
            }
            case SyntheticKind::noise: {
                c = detail::mix(sky, a, 0.4);
                for (std::size_t k = 0; k < 3; ++k) c[k] += noise_at(fy, fx, k);
                break;
            }
            }
            if (fy >= horizon) c = detail::mix(c, ground, 0.75);
            for (std::size_t k = 0; k < 3; ++k)
                img.at(y, x, k) = static_cast<float>(std::clamp(c[k] * light, 0.0, 1.0));
        }
    return img;
}

/// `count` images cycling through the four kinds; image i uses its own
/// derived seed so subsets reproduce independently.
inline std::vector<Image> make_synthetic_dataset(std::size_t count, std::size_t size, std::uint64_t seed) {
    std::vector<Image> out;
    constexpr std::array kinds = {SyntheticKind::gradient, SyntheticKind::circles, SyntheticKind::stripes,
                                  SyntheticKind::noise};
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, i));
        out.push_back(make_synthetic_image(kinds[i % kinds.size()], size, rng));
    }
    return out;
}

} // namespace wssl
