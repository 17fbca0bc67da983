// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// UNet inpainting network, the pretext classifier that shares its encoder,
// and the encoder transplant between them.
//
// Parameter naming:
//   enc<i>.conv<j>.{weight,bias}      encoder level i (i = 0 is full resolution)
//   bottleneck.conv<j>.{weight,bias}
//   dec<i>.conv<j>.{weight,bias}      decoder level i, fed by skip from enc<i>
//   out.{weight,bias}                 1x1 conv to RGB
//   head.<task>.fc<j>.{weight,bias}   pretext classification branch

#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "wssl/error.hpp"
#include "wssl/image.hpp"
#include "wssl/ops.hpp"
#include "wssl/rng.hpp"
#include "wssl/tensor.hpp"

namespace wssl {

struct UNetConfig {
    int depth = 3;
    int base_channels = 8;
    int input_size = 32;

    void validate() const {
        if (depth < 1) throw ArgumentError("UNet depth must be >= 1");
        if (base_channels < 1) throw ArgumentError("UNet base_channels must be >= 1");
        if (input_size < 1 || input_size % (1 << depth) != 0)
            throw ArgumentError("UNet input_size " + std::to_string(input_size) + " is not divisible by 2^depth = " +
                                std::to_string(1 << depth));
    }

    /// Channel width of encoder level `level`; level == depth is the bottleneck.
    std::size_t channels(int level) const { return static_cast<std::size_t>(base_channels) << level; }

    bool operator==(const UNetConfig&) const = default;
};

inline constexpr std::size_t kHeadHidden = 64;
inline constexpr std::size_t kImageChannels = 3;

enum class NetworkKind { unet, pretext };

template <class T>
struct NamedParameter {
    std::string name;
    BasicTensor<T> value;
    bool trainable = true;
};

struct LayerInfo {
    std::string name;
    std::string type;
    Shape weight_shape;
};

template <class T>
class BasicNetwork {
public:
    NetworkKind kind = NetworkKind::unet;
    UNetConfig config;
    std::vector<PretextTask> tasks;
    std::vector<NamedParameter<T>> params;

    const NamedParameter<T>* find(std::string_view name) const {
        for (const auto& p : params)
            if (p.name == name) return &p;
        return nullptr;
    }

    NamedParameter<T>* find(std::string_view name) {
        for (auto& p : params)
            if (p.name == name) return &p;
        return nullptr;
    }

    const BasicTensor<T>& tensor(std::string_view name) const {
        const auto* p = find(name);
        if (!p) throw ArgumentError("network has no parameter '" + std::string(name) + "'");
        return p->value;
    }

    void add(std::string name, BasicTensor<T> value, bool trainable = true) {
        if (find(name)) throw ArgumentError("duplicate parameter name '" + name + "'");
        value.set_requires_grad(trainable);
        params.push_back({std::move(name), std::move(value), trainable});
    }

    void set_trainable(NamedParameter<T>& p, bool on) {
        p.trainable = on;
        p.value.set_requires_grad(on);
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.value.size();
        return n;
    }

    void zero_grad() {
        for (auto& p : params) p.value.zero_grad();
    }

    template <class U>
    BasicNetwork<U> cast() const {
        BasicNetwork<U> out;
        out.kind = kind;
        out.config = config;
        out.tasks = tasks;
        for (const auto& p : params) out.add(p.name, p.value.template cast<U>(), p.trainable);
        return out;
    }

    /// Layer list derived from the weight tensors.
    std::vector<LayerInfo> topology() const {
        std::vector<LayerInfo> layers;
        constexpr std::string_view suffix = ".weight";
        for (const auto& p : params) {
            if (p.name.size() <= suffix.size() || p.name.compare(p.name.size() - suffix.size(), suffix.size(), suffix) != 0)
                continue;
            const auto& s = p.value.shape();
            std::string type = s.size() == 4 ? "conv" + std::to_string(s[0]) + "x" + std::to_string(s[1]) : "dense";
            layers.push_back({p.name.substr(0, p.name.size() - suffix.size()), std::move(type), s});
        }
        return layers;
    }
};

using Network = BasicNetwork<float>;

namespace detail {

template <class T>
BasicTensor<T> he_normal(Shape shape, std::size_t fan_in, Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    std::vector<T> data(numel(shape));
    for (auto& v : data) v = static_cast<T>(stddev * rng.normal());
    return BasicTensor<T>::from(std::move(shape), std::move(data));
}

template <class T>
void add_conv(BasicNetwork<T>& net, const std::string& prefix, std::size_t k, std::size_t cin, std::size_t cout, Rng& rng) {
    net.add(prefix + ".weight", he_normal<T>({k, k, cin, cout}, k * k * cin, rng));
    net.add(prefix + ".bias", BasicTensor<T>::zeros({cout}));
}

template <class T>
void add_dense(BasicNetwork<T>& net, const std::string& prefix, std::size_t n, std::size_t m, Rng& rng) {
    net.add(prefix + ".weight", he_normal<T>({n, m}, n, rng));
    net.add(prefix + ".bias", BasicTensor<T>::zeros({m}));
}

template <class T>
void add_encoder(BasicNetwork<T>& net, const UNetConfig& cfg, Rng& rng) {
    std::size_t cin = kImageChannels;
    for (int i = 0; i < cfg.depth; ++i) {
        const auto c = cfg.channels(i);
        add_conv(net, "enc" + std::to_string(i) + ".conv0", 3, cin, c, rng);
        add_conv(net, "enc" + std::to_string(i) + ".conv1", 3, c, c, rng);
        cin = c;
    }
    const auto cb = cfg.channels(cfg.depth);
    add_conv(net, "bottleneck.conv0", 3, cin, cb, rng);
    add_conv(net, "bottleneck.conv1", 3, cb, cb, rng);
}

inline bool is_encoder_param(std::string_view name) {
    return name.starts_with("enc") || name.starts_with("bottleneck.");
}

template <class T>
BasicTensor<T> conv_relu(const BasicNetwork<T>& net, const BasicTensor<T>& x, const std::string& prefix) {
    return relu(conv2d(x, net.tensor(prefix + ".weight"), net.tensor(prefix + ".bias"), Padding::same_zero));
}

template <class T>
void require_input(const BasicNetwork<T>& net, const BasicTensor<T>& x) {
    if (x.rank() != 3 || x.dim(2) != kImageChannels || x.dim(0) != x.dim(1))
        throw ShapeError("network input must be S x S x 3, got " + to_string(x.shape()));
    if (x.dim(0) % (std::size_t{1} << net.config.depth) != 0)
        throw ShapeError("network input side " + std::to_string(x.dim(0)) + " not divisible by 2^depth");
}

} // namespace detail

/// Full inpainting UNet with He-normal weights and zero biases.
template <class T = float>
BasicNetwork<T> build_unet(const UNetConfig& cfg, Rng& rng) {
    cfg.validate();
    BasicNetwork<T> net;
    net.kind = NetworkKind::unet;
    net.config = cfg;
    detail::add_encoder(net, cfg, rng);
    for (int i = cfg.depth - 1; i >= 0; --i) {
        const auto c = cfg.channels(i);
        const auto below = cfg.channels(i + 1);
        detail::add_conv(net, "dec" + std::to_string(i) + ".conv0", 3, below + c, c, rng);
        detail::add_conv(net, "dec" + std::to_string(i) + ".conv1", 3, c, c, rng);
    }
    detail::add_conv(net, "out", 1, cfg.channels(0), kImageChannels, rng);
    return net;
}

/// Shared encoder + bottleneck followed by one classification branch per task
/// (global average pool, dense to 64 + relu, dense to 4 logits).
template <class T = float>
BasicNetwork<T> build_pretext(const UNetConfig& cfg, const std::vector<PretextTask>& tasks, Rng& rng) {
    cfg.validate();
    if (tasks.empty()) throw ArgumentError("build_pretext: task list is empty");
    detail::validate_task_list(specs_for(tasks));
    BasicNetwork<T> net;
    net.kind = NetworkKind::pretext;
    net.config = cfg;
    net.tasks = tasks;
    detail::add_encoder(net, cfg, rng);
    const auto cb = cfg.channels(cfg.depth);
    for (auto t : tasks) {
        const std::string prefix = "head." + std::string(task_name(t));
        detail::add_dense(net, prefix + ".fc0", cb, kHeadHidden, rng);
        detail::add_dense(net, prefix + ".fc1", kHeadHidden, kNumLevels, rng);
    }
    return net;
}

template <class T>
struct Encoded {
    std::vector<BasicTensor<T>> skips;
    BasicTensor<T> bottleneck;
};

template <class T>
Encoded<T> encode(const BasicNetwork<T>& net, const BasicTensor<T>& x) {
    detail::require_input(net, x);
    Encoded<T> e;
    auto h = x;
    for (int i = 0; i < net.config.depth; ++i) {
        const std::string p = "enc" + std::to_string(i);
        h = detail::conv_relu(net, h, p + ".conv0");
        h = detail::conv_relu(net, h, p + ".conv1");
        e.skips.push_back(h);
        h = maxpool2(h);
    }
    h = detail::conv_relu(net, h, "bottleneck.conv0");
    e.bottleneck = detail::conv_relu(net, h, "bottleneck.conv1");
    return e;
}

/// S x S x 3 in, S x S x 3 out in (0, 1).
template <class T>
BasicTensor<T> forward_unet(const BasicNetwork<T>& net, const BasicTensor<T>& x) {
    auto e = encode(net, x);
    auto h = e.bottleneck;
    for (int i = net.config.depth - 1; i >= 0; --i) {
        const std::string p = "dec" + std::to_string(i);
        h = concat_channels(upsample_nearest2(h), e.skips[static_cast<std::size_t>(i)]);
        h = detail::conv_relu(net, h, p + ".conv0");
        h = detail::conv_relu(net, h, p + ".conv1");
    }
    return sigmoid(conv2d(h, net.tensor("out.weight"), net.tensor("out.bias"), Padding::same_zero));
}

/// One 4-logit vector per task, in net.tasks order.
template <class T>
std::vector<BasicTensor<T>> forward_pretext(const BasicNetwork<T>& net, const BasicTensor<T>& x) {
    if (net.kind != NetworkKind::pretext) throw ArgumentError("forward_pretext on a network without pretext heads");
    auto e = encode(net, x);
    auto pooled = global_avg_pool(e.bottleneck);
    std::vector<BasicTensor<T>> logits;
    for (auto t : net.tasks) {
        const std::string p = "head." + std::string(task_name(t));
        auto h = relu(dense(pooled, net.tensor(p + ".fc0.weight"), net.tensor(p + ".fc0.bias")));
        logits.push_back(dense(h, net.tensor(p + ".fc1.weight"), net.tensor(p + ".fc1.bias")));
    }
    return logits;
}

/// Builds a fresh UNet from rng, overwrites its encoder and bottleneck with
/// bit-exact copies of the pretext weights and freezes them. The pretext
/// classification branches are dropped.
template <class T>
BasicNetwork<T> transplant_and_freeze(const BasicNetwork<T>& pretext, const UNetConfig& cfg, Rng& rng) {
    auto net = build_unet<T>(cfg, rng);
    for (auto& p : net.params) {
        if (!detail::is_encoder_param(p.name)) continue;
        const auto* src = pretext.find(p.name);
        if (!src) throw ArgumentError("transplant: pretext network lacks '" + p.name + "' (config mismatch)");
        if (src->value.shape() != p.value.shape())
            throw ShapeError("transplant: '" + p.name + "' has shape " + to_string(src->value.shape()) + ", expected " +
                             to_string(p.value.shape()));
        p.value = src->value.detach();
        net.set_trainable(p, false);
    }
    // A pretext model built with a deeper config would leave encoder tensors unused.
    for (const auto& p : pretext.params)
        if (detail::is_encoder_param(p.name) && !net.find(p.name))
            throw ArgumentError("transplant: pretext parameter '" + p.name + "' has no counterpart (config mismatch)");
    return net;
}

/// Recovers depth and base width from parameter names and shapes (input_size
/// is not stored in weights and is left at `input_size`).
template <class T>
UNetConfig infer_config(const BasicNetwork<T>& net, int input_size) {
    UNetConfig cfg;
    cfg.depth = 0;
    while (net.find("enc" + std::to_string(cfg.depth) + ".conv0.weight")) ++cfg.depth;
    if (cfg.depth == 0) throw ArgumentError("network has no encoder parameters");
    cfg.base_channels = static_cast<int>(net.tensor("enc0.conv0.weight").dim(3));
    cfg.input_size = input_size;
    return cfg;
}

} // namespace wssl
