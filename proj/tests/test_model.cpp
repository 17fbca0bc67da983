// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cstring>

#include "support.hpp"
#include "wssl/checkpoint.hpp"
#include "wssl/grad_check.hpp"
#include "wssl/losses.hpp"
#include "wssl/model.hpp"
#include "wssl/optim.hpp"

using namespace wssl;
using wssl::testing::random_image;
using wssl::testing::random_tensor;
using Catch::Approx;

namespace {

// kh*kw*Cin*Cout + Cout per conv layer, summed over the UNet topology.
std::size_t unet_parameter_oracle(int depth, std::size_t base) {
    auto conv = [](std::size_t k, std::size_t cin, std::size_t cout) { return k * k * cin * cout + cout; };
    std::size_t total = 0, cin = 3;
    for (int i = 0; i < depth; ++i) {
        const std::size_t c = base << i;
        total += conv(3, cin, c) + conv(3, c, c);
        cin = c;
    }
    const std::size_t cb = base << depth;
    total += conv(3, cin, cb) + conv(3, cb, cb);
    for (int i = depth - 1; i >= 0; --i) {
        const std::size_t c = base << i;
        total += conv(3, (base << (i + 1)) + c, c) + conv(3, c, c);
    }
    return total + conv(1, base, 3);
}

std::vector<float> snapshot(const Network& net, bool frozen_only) {
    std::vector<float> out;
    for (const auto& p : net.params)
        if (!frozen_only || !p.trainable) out.insert(out.end(), p.value.data().begin(), p.value.data().end());
    return out;
}

Network scalar_net(float value) {
    Network net;
    net.add("w", Tensor::from({1}, {value}), true);
    return net;
}

void set_grad(Network& net, float g) {
    auto& p = net.params[0].value;
    p.zero_grad();
    // loss = g * w gives dloss/dw = g.
    backward(scalar_mul(p, g));
}

} // namespace

TEST_CASE("UNet config validation") {
    UNetConfig cfg;
    cfg.input_size = 30;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
    cfg = {};
    cfg.depth = 0;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
    CHECK_NOTHROW(UNetConfig{}.validate());
}

TEST_CASE("UNet forward shape and range") {
    Rng rng(1);
    const UNetConfig cfg;
    auto net = build_unet(cfg, rng);
    const auto x = to_tensor<float>(random_image(32, 32, rng));
    const auto y = forward_unet(net, x);
    CHECK(y.shape() == Shape{32, 32, 3});
    for (float v : y.data()) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
    CHECK(encode(net, x).bottleneck.shape() == Shape{4, 4, 64});
    const auto y2 = forward_unet(net, x);
    CHECK(std::equal(y.data().begin(), y.data().end(), y2.data().begin()));
    CHECK_THROWS_AS(forward_unet(net, Tensor::zeros({36, 36, 3})), ShapeError);
    CHECK_THROWS_AS(forward_unet(net, Tensor::zeros({32, 32, 1})), ShapeError);
}

TEST_CASE("UNet at 224 x 224 with depth 5") {
    Rng rng(2);
    const UNetConfig cfg{5, 4, 224};
    auto net = build_unet(cfg, rng);
    CHECK(forward_unet(net, Tensor::full({224, 224, 3}, 0.5f)).shape() == Shape{224, 224, 3});
}

TEST_CASE("parameter count matches the topology oracle") {
    Rng rng(3);
    CHECK(build_unet(UNetConfig{}, rng).parameter_count() == 122131);
    CHECK(unet_parameter_oracle(3, 8) == 122131);
    for (int depth : {1, 2, 4})
        for (int base : {2, 5})
            CHECK(build_unet(UNetConfig{depth, base, 64}, rng).parameter_count() ==
                  unet_parameter_oracle(depth, static_cast<std::size_t>(base)));
}

TEST_CASE("pretext heads") {
    Rng rng(4);
    const UNetConfig cfg;
    auto one = build_pretext(cfg, {PretextTask::rotation}, rng);
    const auto x = to_tensor<float>(random_image(32, 32, rng));
    auto logits = forward_pretext(one, x);
    REQUIRE(logits.size() == 1);
    CHECK(logits[0].shape() == Shape{4});

    auto three = build_pretext(cfg, {PretextTask::saturation, PretextTask::sharpness, PretextTask::rotation}, rng);
    CHECK(forward_pretext(three, x).size() == 3);
    CHECK(three.find("head.sharpness.fc1.weight") != nullptr);
    CHECK_THROWS_AS(build_pretext(cfg, {}, rng), ArgumentError);
    CHECK_THROWS_AS(forward_pretext(build_unet(cfg, rng), x), ArgumentError);
}

TEST_CASE("pretext and UNet encoders share names, shapes and initial values") {
    const UNetConfig cfg;
    Rng a(5), b(5);
    const auto unet = build_unet(cfg, a);
    const auto pre = build_pretext(cfg, {PretextTask::rotation}, b);
    std::size_t compared = 0;
    for (const auto& p : unet.params) {
        if (!p.name.starts_with("enc") && !p.name.starts_with("bottleneck")) continue;
        const auto* q = pre.find(p.name);
        REQUIRE(q != nullptr);
        CHECK(q->value.shape() == p.value.shape());
        CHECK(std::equal(p.value.data().begin(), p.value.data().end(), q->value.data().begin()));
        ++compared;
    }
    CHECK(compared == 2 * 2 * 3 + 4);
    for (const auto& q : pre.params)
        if (!q.name.starts_with("head.")) CHECK(unet.find(q.name) != nullptr);
}

TEST_CASE("transplant copies and freezes the encoder") {
    const UNetConfig cfg;
    Rng rng(6);
    const auto pre = build_pretext(cfg, {PretextTask::rotation}, rng);
    Rng r1(100), r2(200);
    auto net = transplant_and_freeze(pre, cfg, r1);
    const auto fresh = build_unet(cfg, r2);
    for (const auto& p : net.params) {
        const bool enc = p.name.starts_with("enc") || p.name.starts_with("bottleneck");
        CHECK(p.trainable == !enc);
        if (enc) {
            const auto& src = pre.tensor(p.name);
            CHECK(std::memcmp(p.value.data().data(), src.data().data(), src.size() * sizeof(float)) == 0);
        } else if (p.name.ends_with(".weight")) {
            const auto& other = fresh.tensor(p.name);
            CHECK_FALSE(std::equal(p.value.data().begin(), p.value.data().end(), other.data().begin()));
        }
    }
    CHECK_THROWS(transplant_and_freeze(pre, UNetConfig{2, 8, 32}, r1));
    CHECK_THROWS(transplant_and_freeze(pre, UNetConfig{3, 4, 32}, r1));
}

TEST_CASE("frozen parameters stay bit-identical over optimizer steps") {
    const UNetConfig cfg;
    Rng rng(7);
    const auto pre = build_pretext(cfg, {PretextTask::rotation}, rng);
    auto net = transplant_and_freeze(pre, cfg, rng);
    const auto frozen = snapshot(net, true);
    const auto before = snapshot(net, false);
    const auto x = to_tensor<float>(random_image(32, 32, rng));
    const auto target = to_tensor<float>(random_image(32, 32, rng));
    TrainHyper h;
    h.learning_rate = 1e-3;
    AdamState state;
    for (int step = 0; step < 10; ++step) {
        net.zero_grad();
        backward(loss_wssl(forward_unet(net, x), target));
        adam_step(net, state, h);
    }
    CHECK(snapshot(net, true) == frozen);
    CHECK(snapshot(net, false) != before);
    for (const auto& p : net.params) CHECK(state.moments.count(p.name) == (p.trainable ? 1u : 0u));
}

TEST_CASE("Adam first step has magnitude lr") {
    TrainHyper h;
    h.learning_rate = 1e-3;
    for (float g : {1.0f, 100.0f, -0.01f}) {
        auto net = scalar_net(0.5f);
        AdamState state;
        set_grad(net, g);
        adam_step(net, state, h);
        const double delta = static_cast<double>(net.params[0].value[0]) - 0.5;
        const double expect = -(g > 0 ? 1.0 : -1.0) * h.learning_rate / (1.0 + h.epsilon / std::abs(g));
        CHECK(std::abs(delta - expect) <= 1e-6);
        CHECK(std::abs(std::abs(delta) - h.learning_rate) <= 1e-6);
        CHECK(state.step == 1);
    }
}

TEST_CASE("Adam with zero gradients or zero learning rate leaves parameters unchanged") {
    TrainHyper h;
    auto net = scalar_net(0.25f);
    AdamState state;
    set_grad(net, 0.0f);
    adam_step(net, state, h);
    CHECK(net.params[0].value[0] == 0.25f);

    h.learning_rate = 0.0;
    auto net2 = scalar_net(0.75f);
    AdamState s2;
    for (int i = 0; i < 3; ++i) {
        set_grad(net2, 2.0f);
        adam_step(net2, s2, h);
    }
    CHECK(net2.params[0].value[0] == 0.75f);
    CHECK(s2.step == 3);
    CHECK(s2.moments.at("w").m[0] != 0.0f);
    CHECK(s2.moments.at("w").v[0] != 0.0f);
}

TEST_CASE("Adam requires gradients on trainable parameters") {
    Network net;
    net.params.push_back({"w", Tensor::from({1}, {1.0f}), true});
    AdamState state;
    CHECK_THROWS_AS(adam_step(net, state, TrainHyper{}), ArgumentError);
    TrainHyper bad;
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("end-to-end UNet gradient matches central differences") {
    // Small double-precision instance: depth 2 at 8 x 8, SSIM window 5.
    Rng rng(8);
    const UNetConfig cfg{2, 2, 8};
    auto net = build_unet<double>(cfg, rng);
    const auto x = random_tensor<double>({8, 8, 3}, rng, 0.0, 1.0);
    const auto target = random_tensor<double>({8, 8, 3}, rng, 0.0, 1.0);
    SsimParams sp;
    sp.window_size = 5;
    std::vector<TensorD> params;
    for (const auto& p : net.params) params.push_back(p.value);
    auto builder = [&](std::vector<TensorD>& v) {
        BasicNetwork<double> view;
        view.config = cfg;
        for (std::size_t i = 0; i < v.size(); ++i) view.params.push_back({net.params[i].name, v[i], true});
        return loss_wssl(forward_unet(view, x), target, sp);
    };
    const auto r = grad_check<double>(builder, params, 1e-2, true);
    CHECK(r.checked > r.skipped);
    CHECK(r.max_rel_error < 1e-2);
}

TEST_CASE("checkpoint round trip is bit-exact") {
    Rng rng(9);
    const UNetConfig cfg;
    auto net = build_pretext(cfg, {PretextTask::rotation, PretextTask::sharpness}, rng);
    net.set_trainable(*net.find("enc0.conv0.weight"), false);
    AdamState state;
    state.step = 7;
    state.moments["enc1.conv0.bias"] = {{16}, std::vector<float>(16, 0.5f), std::vector<float>(16, 0.25f)};
    const auto bytes = serialize_checkpoint(net, state);
    CHECK(bytes.substr(0, 5) == std::string("WSSL\x01", 5));
    const auto ck = deserialize_checkpoint(bytes);
    CHECK(serialize_checkpoint(ck.network, ck.adam) == bytes);
    CHECK(ck.network.kind == NetworkKind::pretext);
    CHECK(ck.network.tasks.size() == 2);
    CHECK(ck.network.config.depth == 3);
    CHECK(ck.network.config.base_channels == 8);
    CHECK(ck.adam.step == 7);
    CHECK_FALSE(ck.network.find("enc0.conv0.weight")->trainable);
    for (const auto& p : net.params) {
        const auto& q = ck.network.tensor(p.name);
        CHECK(std::memcmp(p.value.data().data(), q.data().data(), q.size() * sizeof(float)) == 0);
    }

    const auto dir = wssl::testing::temp_dir("ckpt");
    save_checkpoint(net, state, dir / "a.ckpt");
    const auto loaded = load_checkpoint(dir / "a.ckpt");
    save_checkpoint(loaded.network, loaded.adam, dir / "b.ckpt");
    CHECK(wssl::testing::slurp(dir / "a.ckpt") == wssl::testing::slurp(dir / "b.ckpt"));
}

TEST_CASE("checkpoint parameter count matches the topology oracle") {
    Rng rng(10);
    const auto net = build_unet(UNetConfig{}, rng);
    const auto ck = deserialize_checkpoint(serialize_checkpoint(net, {}));
    CHECK(ck.network.parameter_count() == unet_parameter_oracle(3, 8));
    CHECK(ck.network.kind == NetworkKind::unet);
}

TEST_CASE("corrupted checkpoints are rejected") {
    Rng rng(11);
    const auto net = build_unet(UNetConfig{1, 2, 32}, rng);
    const auto bytes = serialize_checkpoint(net, {});
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_checkpoint(bad_magic), CheckpointError);
    auto bad_version = bytes;
    bad_version[4] = 2;
    CHECK_THROWS_AS(deserialize_checkpoint(bad_version), CheckpointError);
    CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), CheckpointError);
    CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), CheckpointError);
    // Inflate the first tensor's leading dimension past the payload.
    auto big = bytes;
    const std::size_t name_len = static_cast<unsigned char>(big[9]);
    const std::size_t dim_at = 9 + 2 + name_len + 2;
    big[dim_at + 3] = 0x40;
    CHECK_THROWS_AS(deserialize_checkpoint(big), CheckpointError);
    try {
        deserialize_checkpoint(bad_magic);
    } catch (const CheckpointError& e) {
        CHECK(std::string(e.what()).find("magic") != std::string::npos);
    }
}
