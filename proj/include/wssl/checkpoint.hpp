// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint format, all integers little-endian:
//
//   "WSSL" 0x01
//   u32 tensor count
//   per tensor: u16 name length, UTF-8 name, u8 trainable, u8 ndim,
//               ndim x u32 dims, float32 payload
//   u64 Adam step counter
//
// Adam moments are stored as extra tensors "<param>.adam_m" / "<param>.adam_v"
// after the network parameters.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wssl/error.hpp"
#include "wssl/model.hpp"
#include "wssl/optim.hpp"

namespace wssl {

inline constexpr std::array<char, 4> kCheckpointMagic = {'W', 'S', 'S', 'L'};
inline constexpr std::uint8_t kCheckpointVersion = 0x01;

struct Checkpoint {
    Network network;
    AdamState adam;
};

namespace detail {

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) { le(v); }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
    const std::string& bytes() const { return bytes_; }

private:
    template <class U>
    void le(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    std::string bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint16_t u16() { return le<std::uint16_t>(); }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string_view take(std::size_t n) {
        if (remaining() < n) throw CheckpointError("checkpoint truncated");
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    template <class U>
    U le() {
        auto s = take(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }
    std::string_view data_;
    std::size_t pos_ = 0;
};

inline void write_tensor(ByteWriter& w, std::string_view name, bool trainable, const Shape& shape,
                         std::span<const float> values) {
    if (name.size() > 0xffff) throw CheckpointError("tensor name too long");
    if (shape.size() > 0xff) throw CheckpointError("tensor rank too large");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name);
    w.u8(trainable ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(shape.size()));
    for (auto d : shape) w.u32(static_cast<std::uint32_t>(d));
    for (float v : values) w.f32(v);
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

} // namespace detail

inline std::string serialize_checkpoint(const Network& net, const AdamState& state) {
    detail::ByteWriter w;
    w.raw(std::string_view(kCheckpointMagic.data(), kCheckpointMagic.size()));
    w.u8(kCheckpointVersion);
    std::size_t count = net.params.size() + 2 * state.moments.size();
    if (count > 0xffffffffu) throw CheckpointError("too many tensors");
    w.u32(static_cast<std::uint32_t>(count));
    for (const auto& p : net.params) {
        if (detail::ends_with(p.name, ".adam_m") || detail::ends_with(p.name, ".adam_v"))
            throw CheckpointError("parameter name '" + p.name + "' collides with optimizer tensor naming");
        detail::write_tensor(w, p.name, p.trainable, p.value.shape(), p.value.data());
    }
    for (const auto& [name, mom] : state.moments) {
        detail::write_tensor(w, name + ".adam_m", false, mom.shape, mom.m);
        detail::write_tensor(w, name + ".adam_v", false, mom.shape, mom.v);
    }
    w.u64(state.step);
    return w.bytes();
}

inline Checkpoint deserialize_checkpoint(std::string_view bytes) {
    detail::ByteReader r(bytes);
    if (bytes.size() < 5 || std::memcmp(bytes.data(), kCheckpointMagic.data(), 4) != 0)
        throw CheckpointError("not a WSSL checkpoint (bad magic/version)");
    r.take(4);
    if (r.u8() != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version (bad magic/version)");
    const auto count = r.u32();
    Checkpoint ck;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = r.u16();
        std::string name(r.take(name_len));
        const bool trainable = r.u8() != 0;
        const auto ndim = r.u8();
        if (ndim == 0) throw CheckpointError("tensor '" + name + "' has rank 0");
        Shape shape;
        for (std::uint8_t d = 0; d < ndim; ++d) {
            auto dim = r.u32();
            if (dim == 0) throw CheckpointError("tensor '" + name + "' has a zero dimension");
            shape.push_back(dim);
        }
        const auto n = numel(shape);
        if (n > r.remaining() / 4) throw CheckpointError("shape table of '" + name + "' exceeds payload length");
        std::vector<float> values(n);
        for (auto& v : values) v = r.f32();

        const bool is_m = detail::ends_with(name, ".adam_m");
        const bool is_v = detail::ends_with(name, ".adam_v");
        if (is_m || is_v) {
            auto& mom = ck.adam.moments[name.substr(0, name.size() - 7)];
            if (!mom.shape.empty() && mom.shape != shape) throw CheckpointError("inconsistent moment shapes for '" + name + "'");
            mom.shape = shape;
            (is_m ? mom.m : mom.v) = std::move(values);
        } else {
            try {
                ck.network.add(name, Tensor::from(shape, std::move(values)), trainable);
            } catch (const Error& e) {
                throw CheckpointError(std::string("invalid tensor in checkpoint: ") + e.what());
            }
        }
    }
    ck.adam.step = r.u64();
    if (r.remaining() != 0) throw CheckpointError("trailing bytes after checkpoint payload");
    for (const auto& [name, mom] : ck.adam.moments)
        if (mom.m.size() != numel(mom.shape) || mom.v.size() != numel(mom.shape))
            throw CheckpointError("optimizer state for '" + name + "' is incomplete");

    auto& net = ck.network;
    for (const auto& p : net.params) {
        if (!p.name.starts_with("head.")) continue;
        auto rest = std::string_view(p.name).substr(5);
        auto task = parse_task(rest.substr(0, rest.find('.')));
        if (!task) throw CheckpointError("unknown pretext head in '" + p.name + "'");
        if (std::find(net.tasks.begin(), net.tasks.end(), *task) == net.tasks.end()) net.tasks.push_back(*task);
    }
    net.kind = net.tasks.empty() ? NetworkKind::unet : NetworkKind::pretext;
    if (net.find("enc0.conv0.weight")) net.config = infer_config(net, 0);
    return ck;
}

inline void save_checkpoint(const Network& net, const AdamState& state, const std::filesystem::path& path) {
    const auto bytes = serialize_checkpoint(net, state);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

} // namespace wssl
