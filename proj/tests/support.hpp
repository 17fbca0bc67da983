// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the test suites.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "wssl/image.hpp"
#include "wssl/ops.hpp"
#include "wssl/rng.hpp"
#include "wssl/tensor.hpp"

namespace wssl::testing {

template <class T>
BasicTensor<T> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<T> v(numel(shape));
    for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
    return BasicTensor<T>::from(shape, std::move(v));
}

// Values bounded away from zero: |x| in [gap, 1].
template <class T>
BasicTensor<T> random_away_from_zero(const Shape& shape, Rng& rng, double gap) {
    std::vector<T> v(numel(shape));
    for (auto& x : v) {
        const double m = rng.uniform(gap, 1.0);
        x = static_cast<T>(rng.uniform() < 0.5 ? -m : m);
    }
    return BasicTensor<T>::from(shape, std::move(v));
}

/// Reduces any tensor to a scalar through fixed random weights, so every
/// output coordinate contributes a distinct gradient.
template <class T>
BasicTensor<T> project(const BasicTensor<T>& out, std::uint64_t seed) {
    Rng rng(seed);
    return sum(mul(out, random_tensor<T>(out.shape(), rng)));
}

inline Image random_image(std::size_t h, std::size_t w, Rng& rng) {
    Image img(h, w);
    for (auto& p : img.pixels) p = static_cast<float>(rng.uniform());
    return img;
}

inline Image constant_image(std::size_t h, std::size_t w, float r, float g, float b) {
    Image img(h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
    return img;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("wssl_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace wssl::testing
