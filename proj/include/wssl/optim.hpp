// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wssl/error.hpp"
#include "wssl/model.hpp"

namespace wssl {

struct TrainHyper {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 8;
    int epochs_pretext = 5;
    int epochs_downstream = 5;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate >= 0.0)) throw ArgumentError("learning_rate must be >= 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ArgumentError("beta1 must lie in [0, 1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ArgumentError("beta2 must lie in [0, 1)");
        if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
        if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
        if (epochs_pretext < 0 || epochs_downstream < 0) throw ArgumentError("epoch counts must be >= 0");
    }
};

struct AdamMoments {
    Shape shape;
    std::vector<float> m;
    std::vector<float> v;
};

/// First/second moment buffers per trainable parameter, keyed by name.
struct AdamState {
    std::map<std::string, AdamMoments> moments;
    std::uint64_t step = 0;
};

/// One bias-corrected Adam update using the gradients held by the network's
/// trainable parameters. Frozen parameters are not touched.
inline void adam_step(Network& net, AdamState& state, const TrainHyper& h) {
    for (const auto& p : net.params)
        if (p.trainable && !p.value.has_grad()) throw ArgumentError("adam_step: missing gradient for '" + p.name + "'");
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(h.beta1, t);
    const double bias2 = 1.0 - std::pow(h.beta2, t);
    for (auto& p : net.params) {
        if (!p.trainable) continue;
        auto& mom = state.moments[p.name];
        if (mom.m.empty()) {
            mom.shape = p.value.shape();
            mom.m.assign(p.value.size(), 0.0f);
            mom.v.assign(p.value.size(), 0.0f);
        } else if (mom.shape != p.value.shape()) {
            throw ShapeError("adam_step: moment shape mismatch for '" + p.name + "'");
        }
        auto g = p.value.grad();
        auto w = p.value.mutable_data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g[i];
            const double m = h.beta1 * mom.m[i] + (1.0 - h.beta1) * gi;
            const double v = h.beta2 * mom.v[i] + (1.0 - h.beta2) * gi * gi;
            mom.m[i] = static_cast<float>(m);
            mom.v[i] = static_cast<float>(v);
            const double m_hat = static_cast<double>(mom.m[i]) / bias1;
            const double v_hat = static_cast<double>(mom.v[i]) / bias2;
            const double delta = h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
            w[i] = static_cast<float>(static_cast<double>(w[i]) - delta);
        }
        detail::require_finite<float>(w, "adam_step");
    }
}

} // namespace wssl
