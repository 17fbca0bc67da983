// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reconstruction and perceptual losses for inpainting, the weighted pretext
// objective, and the SSIM / PSNR evaluation metrics.

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "wssl/error.hpp"
#include "wssl/image.hpp"
#include "wssl/ops.hpp"
#include "wssl/tensor.hpp"

namespace wssl {

/// Windowed SSIM constants (Wang et al. 2004 defaults).
struct SsimParams {
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
    int window_size = 11;
    double sigma = 1.5;

    double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }

    void validate() const {
        if (!(k1 > 0.0 && k2 > 0.0 && dynamic_range > 0.0)) throw ArgumentError("SSIM constants must be positive");
        if (window_size < 1 || window_size % 2 == 0) throw ArgumentError("SSIM window size must be odd and positive");
        if (!(sigma > 0.0)) throw ArgumentError("SSIM sigma must be positive");
    }

    /// Normalised 2-D Gaussian window, row-major window_size x window_size.
    std::vector<double> window() const {
        validate();
        const int n = window_size;
        const double centre = (n - 1) / 2.0;
        std::vector<double> g(static_cast<std::size_t>(n));
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += (g[static_cast<std::size_t>(i)] = std::exp(-(i - centre) * (i - centre) / (2.0 * sigma * sigma)));
        for (auto& v : g) v /= total;
        std::vector<double> w(g.size() * g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j) w[i * g.size() + j] = g[i] * g[j];
        return w;
    }
};

struct LogCoshParams {
    double a = 1.0;

    void validate() const {
        if (!(a > 0.0)) throw ArgumentError("log-cosh scale a must be positive");
    }
};

struct WsslLossParams {
    double alpha = 0.84;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("WSSL alpha must lie in [0, 1]");
    }
};

/// Loss weight per active pretext task; weights lie in [0, 1] and sum to 1.
struct TaskWeights {
    std::map<PretextTask, double> weights;

    void validate() const {
        if (weights.empty()) throw ArgumentError("task weights are empty");
        double total = 0.0;
        for (const auto& [task, w] : weights) {
            if (!(w >= 0.0 && w <= 1.0))
                throw ArgumentError("weight for " + std::string(task_name(task)) + " outside [0, 1]");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("task weights must sum to 1, got " + std::to_string(total));
    }

    std::vector<PretextTask> tasks() const {
        std::vector<PretextTask> out;
        for (const auto& [task, w] : weights) out.push_back(task);
        return out;
    }
};

// ---------------------------------------------------------------------------
// log-cosh

/// log(cosh(u)) without overflow or cancellation.
inline double log_cosh_value(double u) {
    const double m = std::abs(u);
    if (m < 1.0) {
        // cosh(u) - 1 = 2 sinh^2(u / 2) keeps full precision near zero.
        const double s = std::sinh(0.5 * u);
        return std::log1p(2.0 * s * s);
    }
    return m + std::log1p(std::exp(-2.0 * m)) - std::numbers::ln2;
}

/// Elementwise (1/a) log cosh(a t); derivative tanh(a t).
template <class T>
BasicTensor<T> log_cosh(const BasicTensor<T>& t, double a = 1.0) {
    if (!(a > 0.0)) throw ArgumentError("log_cosh: scale must be positive");
    return detail::map_unary<T>(
        "log_cosh", t, [a](T x) { return static_cast<T>(log_cosh_value(a * static_cast<double>(x)) / a); },
        [a](T x, T) { return static_cast<T>(std::tanh(a * static_cast<double>(x))); });
}

template <class T>
BasicTensor<T> loss_logcosh(const BasicTensor<T>& pred, const BasicTensor<T>& target, const LogCoshParams& p = {}) {
    p.validate();
    if (pred.shape() != target.shape())
        throw ShapeError("loss_logcosh: shape mismatch " + to_string(pred.shape()) + " vs " + to_string(target.shape()));
    return mean(log_cosh(sub(pred, target), p.a));
}

// ---------------------------------------------------------------------------
// SSIM

/// Mean SSIM over all window positions and channels (valid padding).
template <class T>
BasicTensor<T> ssim(const BasicTensor<T>& x, const BasicTensor<T>& y, const SsimParams& p = {}) {
    if (x.shape() != y.shape()) throw ShapeError("ssim: shape mismatch " + to_string(x.shape()) + " vs " + to_string(y.shape()));
    if (x.rank() != 3) throw ShapeError("ssim expects H x W x C tensors");
    const auto n = static_cast<std::size_t>(p.window_size);
    if (x.dim(0) < n || x.dim(1) < n)
        throw ShapeError("ssim: image " + to_string(x.shape()) + " smaller than window " + std::to_string(n));
    const auto wd = p.window();
    const std::vector<T> w(wd.begin(), wd.end());
    const T c1 = static_cast<T>(p.c1());
    const T c2 = static_cast<T>(p.c2());

    auto mu_x = window_filter(x, w, n, n);
    auto mu_y = window_filter(y, w, n, n);
    auto mu_xx = square(mu_x);
    auto mu_yy = square(mu_y);
    auto mu_xy = mul(mu_x, mu_y);
    auto var_x = sub(window_filter(square(x), w, n, n), mu_xx);
    auto var_y = sub(window_filter(square(y), w, n, n), mu_yy);
    auto cov_xy = sub(window_filter(mul(x, y), w, n, n), mu_xy);

    auto luminance_num = add_scalar(scalar_mul(mu_xy, T{2}), c1);
    auto contrast_num = add_scalar(scalar_mul(cov_xy, T{2}), c2);
    auto luminance_den = add_scalar(add(mu_xx, mu_yy), c1);
    auto contrast_den = add_scalar(add(var_x, var_y), c2);
    auto map = div(mul(luminance_num, contrast_num), mul(luminance_den, contrast_den));
    return mean(map);
}

template <class T>
BasicTensor<T> loss_ssim(const BasicTensor<T>& x, const BasicTensor<T>& y, const SsimParams& p = {}) {
    auto s = ssim(x, y, p);
    return add_scalar(scalar_mul(s, T{-1}), T{1});
}

/// alpha * log-cosh + (1 - alpha) * (1 - SSIM). The endpoints return the
/// corresponding component unchanged.
template <class T>
BasicTensor<T> loss_wssl(const BasicTensor<T>& pred, const BasicTensor<T>& target, const SsimParams& ssim_p = {},
                         const LogCoshParams& logcosh_p = {}, const WsslLossParams& w = {}) {
    w.validate();
    if (w.alpha == 1.0) return loss_logcosh(pred, target, logcosh_p);
    if (w.alpha == 0.0) return loss_ssim(pred, target, ssim_p);
    auto rec = loss_logcosh(pred, target, logcosh_p);
    auto per = loss_ssim(pred, target, ssim_p);
    return add(scalar_mul(rec, static_cast<T>(w.alpha)), scalar_mul(per, static_cast<T>(1.0 - w.alpha)));
}

/// Sum over tasks of w_i * L_i.
template <class T>
BasicTensor<T> weighted_pretext_loss(const std::map<PretextTask, BasicTensor<T>>& per_task, const TaskWeights& w) {
    w.validate();
    if (per_task.size() != w.weights.size()) throw ArgumentError("weighted_pretext_loss: task sets differ");
    BasicTensor<T> total;
    for (const auto& [task, weight] : w.weights) {
        auto it = per_task.find(task);
        if (it == per_task.end())
            throw ArgumentError("weighted_pretext_loss: no loss for task " + std::string(task_name(task)));
        if (!it->second.is_scalar()) throw ShapeError("weighted_pretext_loss: per-task losses must be scalars");
        auto term = scalar_mul(it->second, static_cast<T>(weight));
        total = total ? add(total, term) : term;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Metrics

inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE); identical inputs give kPsnrInfinity.
template <class T>
double psnr(std::span<const T> x, std::span<const T> y, double peak = 1.0) {
    if (x.size() != y.size()) throw ShapeError("psnr: size mismatch");
    if (x.empty()) throw ShapeError("psnr: empty input");
    double se = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
        se += d * d;
    }
    const double mse = se / static_cast<double>(x.size());
    if (mse == 0.0) return kPsnrInfinity;
    return 10.0 * std::log10(peak * peak / mse);
}

inline double psnr(const Image& x, const Image& y, double peak = 1.0) {
    require_same_shape(x, y, "psnr");
    return psnr<float>(x.pixels, y.pixels, peak);
}

/// SSIM of two images as a plain number, evaluated in double precision.
inline double ssim_value(const Image& x, const Image& y, const SsimParams& p = {}) {
    require_same_shape(x, y, "ssim");
    return ssim(to_tensor<double>(x), to_tensor<double>(y), p).item();
}

} // namespace wssl
