// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "wssl/tensor.hpp"

namespace wssl {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    // Coordinates whose +/- eps probes changed a relu sign or pool argmax.
    std::size_t skipped = 0;
};

inline constexpr double kGradCheckFloor = 1e-6;

namespace detail {

template <class T>
std::vector<std::uint32_t> decision_signature(const BasicTensor<T>& root) {
    std::vector<std::uint32_t> sig;
    for (auto* node : topological_order(root)) {
        sig.push_back(static_cast<std::uint32_t>(node->decisions.size()));
        sig.insert(sig.end(), node->decisions.begin(), node->decisions.end());
    }
    return sig;
}

template <class T>
bool same_bits(T a, T b) {
    return std::memcmp(&a, &b, sizeof(T)) == 0;
}

} // namespace detail

/// Compares reverse-mode gradients of a scalar-valued builder against central
/// differences over every coordinate of every input. The relative error of a
/// coordinate is |analytic - numeric| / max(|analytic|, |numeric|, kGradCheckFloor).
/// The floor keeps near-zero gradients, where the O(eps^2) truncation error of
/// the central difference dominates, from reading as large relative errors.
///
/// With skip_kinks, coordinates whose probes flip a discrete decision of a
/// relu or max-pool node are excluded (and counted in `skipped`).
template <class T, class Builder>
GradCheckResult grad_check(Builder&& builder, std::vector<BasicTensor<T>>& inputs, double eps,
                           bool skip_kinks = false) {
    for (auto& in : inputs) {
        in.set_requires_grad(true);
        in.zero_grad();
    }
    auto out = builder(inputs);
    if (!out.is_scalar()) throw ShapeError("grad_check: builder must return a scalar");
    const auto base_sig = detail::decision_signature(out);
    {
        auto again = builder(inputs);
        if (!detail::same_bits(out.item(), again.item()) || detail::decision_signature(again) != base_sig)
            throw ArgumentError("grad_check: builder is not deterministic");
    }
    backward(out);

    GradCheckResult result;
    for (auto& in : inputs) {
        std::vector<T> analytic(in.grad().begin(), in.grad().end());
        auto values = in.mutable_data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const T saved = values[i];
            values[i] = static_cast<T>(saved + eps);
            auto plus = builder(inputs);
            values[i] = static_cast<T>(saved - eps);
            auto minus = builder(inputs);
            values[i] = saved;
            if (skip_kinks &&
                (detail::decision_signature(plus) != base_sig || detail::decision_signature(minus) != base_sig)) {
                ++result.skipped;
                continue;
            }
            const double numeric =
                (static_cast<double>(plus.item()) - static_cast<double>(minus.item())) / (2.0 * eps);
            const double a = analytic[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
            result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / denom);
            ++result.checked;
        }
    }
    return result;
}

} // namespace wssl
