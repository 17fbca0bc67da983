// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable operators. Spatial tensors are H x W x C, row-major,
// channels innermost. Convolution kernels are kh x kw x Cin x Cout.

#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "wssl/tensor.hpp"

namespace wssl {

namespace detail {

template <class T, class Backward>
BasicTensor<T> record(std::string_view op, Shape shape, std::vector<T> data,
                      std::initializer_list<BasicTensor<T>> inputs, Backward&& bwd,
                      std::vector<std::uint32_t> decisions = {}) {
    require_finite<T>(data, op);
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->op = op;
    node->decisions = std::move(decisions);
    bool any = std::any_of(inputs.begin(), inputs.end(), [](const BasicTensor<T>& t) { return t.requires_grad(); });
    if (any) {
        node->requires_grad = true;
        for (const auto& in : inputs) node->inputs.push_back(in.node_ptr());
        node->backward = std::forward<Backward>(bwd);
    }
    return BasicTensor<T>(std::move(node));
}

template <class T>
void require_spatial(const BasicTensor<T>& t, std::string_view op) {
    if (t.rank() != 3) throw ShapeError(std::string(op) + " expects an H x W x C tensor, got " + to_string(t.shape()));
}

// Elementwise unary map; deriv(x, y) returns dy/dx.
template <class T, class F, class D>
BasicTensor<T> map_unary(std::string_view op, const BasicTensor<T>& a, F f, D deriv) {
    std::vector<T> out(a.size());
    auto x = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
    return record<T>(op, a.shape(), std::move(out), {a}, [deriv](Node<T>& self) {
        auto& in = *self.inputs[0];
        if (!in.requires_grad) return;
        for (std::size_t i = 0; i < self.data.size(); ++i) in.grad[i] += self.grad[i] * deriv(in.data[i], self.data[i]);
    });
}

// Binary elementwise with scalar-vs-tensor broadcasting. dfa/dfb(x, y) give
// the partial derivatives of f at (x, y).
template <class T, class F, class DA, class DB>
BasicTensor<T> map_binary(std::string_view op, const BasicTensor<T>& a, const BasicTensor<T>& b, F f, DA dfa, DB dfb) {
    const bool a_scalar = a.is_scalar() && !b.is_scalar();
    const bool b_scalar = b.is_scalar() && !a.is_scalar();
    if (!a_scalar && !b_scalar && a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    const Shape& shape = a_scalar ? b.shape() : a.shape();
    std::vector<T> out(numel(shape));
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[a_scalar ? 0 : i], y[b_scalar ? 0 : i]);
    return record<T>(op, shape, std::move(out), {a, b}, [a_scalar, b_scalar, dfa, dfb](Node<T>& self) {
        auto& na = *self.inputs[0];
        auto& nb = *self.inputs[1];
        for (std::size_t i = 0; i < self.data.size(); ++i) {
            const std::size_t ia = a_scalar ? 0 : i;
            const std::size_t ib = b_scalar ? 0 : i;
            const T g = self.grad[i];
            if (na.requires_grad) na.grad[ia] += g * dfa(na.data[ia], nb.data[ib]);
            if (nb.requires_grad) nb.grad[ib] += g * dfb(na.data[ia], nb.data[ib]);
        }
    });
}

} // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

template <class T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return detail::map_binary<T>("add", a, b, [](T x, T y) { return x + y; }, [](T, T) { return T{1}; },
                                 [](T, T) { return T{1}; });
}

template <class T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return detail::map_binary<T>("sub", a, b, [](T x, T y) { return x - y; }, [](T, T) { return T{1}; },
                                 [](T, T) { return T{-1}; });
}

template <class T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return detail::map_binary<T>("mul", a, b, [](T x, T y) { return x * y; }, [](T, T y) { return y; },
                                 [](T x, T) { return x; });
}

template <class T>
BasicTensor<T> div(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (std::any_of(b.data().begin(), b.data().end(), [](T v) { return v == T{0}; }))
        throw NumericError("div: division by zero");
    return detail::map_binary<T>("div", a, b, [](T x, T y) { return x / y; }, [](T, T y) { return T{1} / y; },
                                 [](T x, T y) { return -x / (y * y); });
}

template <class T>
BasicTensor<T> scalar_mul(const BasicTensor<T>& a, T s) {
    return detail::map_unary<T>("scalar_mul", a, [s](T x) { return s * x; }, [s](T, T) { return s; });
}

template <class T>
BasicTensor<T> add_scalar(const BasicTensor<T>& a, T s) {
    return detail::map_unary<T>("add_scalar", a, [s](T x) { return x + s; }, [](T, T) { return T{1}; });
}

template <class T>
BasicTensor<T> square(const BasicTensor<T>& a) {
    return detail::map_unary<T>("square", a, [](T x) { return x * x; }, [](T x, T) { return T{2} * x; });
}

template <class T>
BasicTensor<T> abs(const BasicTensor<T>& a) {
    return detail::map_unary<T>("abs", a, [](T x) { return std::abs(x); },
                                [](T x, T) { return x > T{0} ? T{1} : (x < T{0} ? T{-1} : T{0}); });
}

template <class T>
BasicTensor<T> exp(const BasicTensor<T>& a) {
    return detail::map_unary<T>("exp", a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <class T>
BasicTensor<T> log(const BasicTensor<T>& a) {
    if (std::any_of(a.data().begin(), a.data().end(), [](T v) { return v <= T{0}; }))
        throw NumericError("log: input must be strictly positive");
    return detail::map_unary<T>("log", a, [](T x) { return std::log(x); }, [](T x, T) { return T{1} / x; });
}

template <class T>
BasicTensor<T> sigmoid(const BasicTensor<T>& a) {
    return detail::map_unary<T>(
        "sigmoid", a,
        [](T x) {
            if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
            T e = std::exp(x);
            return e / (T{1} + e);
        },
        [](T, T y) { return y * (T{1} - y); });
}

template <class T>
BasicTensor<T> relu(const BasicTensor<T>& a) {
    auto x = a.data();
    std::vector<T> out(a.size());
    std::vector<std::uint32_t> active((a.size() + 31) / 32, 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (x[i] > T{0}) {
            out[i] = x[i];
            active[i / 32] |= 1u << (i % 32);
        } else {
            out[i] = T{0};
        }
    }
    return detail::record<T>(
        "relu", a.shape(), std::move(out), {a},
        [](Node<T>& self) {
            auto& in = *self.inputs[0];
            if (!in.requires_grad) return;
            for (std::size_t i = 0; i < self.data.size(); ++i)
                if (in.data[i] > T{0}) in.grad[i] += self.grad[i];
        },
        std::move(active));
}

template <class T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
    T total{0};
    for (T v : a.data()) total += v;
    return detail::record<T>("sum", {1}, {total}, {a}, [](Node<T>& self) {
        auto& in = *self.inputs[0];
        if (!in.requires_grad) return;
        for (auto& g : in.grad) g += self.grad[0];
    });
}

template <class T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
    T total{0};
    for (T v : a.data()) total += v;
    const T inv = T{1} / static_cast<T>(a.size());
    return detail::record<T>("mean", {1}, {total * inv}, {a}, [inv](Node<T>& self) {
        auto& in = *self.inputs[0];
        if (!in.requires_grad) return;
        for (auto& g : in.grad) g += self.grad[0] * inv;
    });
}

enum class ElementwiseOp { add, sub, mul, scalar_mul, abs, exp, log, relu, sigmoid, mean };

/// Dispatcher over the elementwise family. For scalar_mul, b must be a
/// scalar tensor holding the factor (treated as a constant).
template <class T>
BasicTensor<T> elementwise(ElementwiseOp op, const BasicTensor<T>& a, const BasicTensor<T>& b = {}) {
    auto need_b = [&] {
        if (!b) throw ArgumentError("binary elementwise op requires a second operand");
    };
    switch (op) {
    case ElementwiseOp::add: need_b(); return add(a, b);
    case ElementwiseOp::sub: need_b(); return sub(a, b);
    case ElementwiseOp::mul: need_b(); return mul(a, b);
    case ElementwiseOp::scalar_mul: need_b(); return scalar_mul(a, b.item());
    case ElementwiseOp::abs: return abs(a);
    case ElementwiseOp::exp: return exp(a);
    case ElementwiseOp::log: return log(a);
    case ElementwiseOp::relu: return relu(a);
    case ElementwiseOp::sigmoid: return sigmoid(a);
    case ElementwiseOp::mean: return mean(a);
    }
    throw ArgumentError("unknown elementwise op");
}

// ---------------------------------------------------------------------------
// Spatial

enum class Padding { same_zero, valid };

template <class T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel, const BasicTensor<T>& bias,
                      Padding padding = Padding::same_zero) {
    detail::require_spatial(input, "conv2d");
    if (kernel.rank() != 4) throw ShapeError("conv2d kernel must be kh x kw x Cin x Cout, got " + to_string(kernel.shape()));
    const std::size_t H = input.dim(0), W = input.dim(1), Cin = input.dim(2);
    const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), Cout = kernel.dim(3);
    if (kernel.dim(2) != Cin)
        throw ShapeError("conv2d channel mismatch: input has " + std::to_string(Cin) + ", kernel expects " +
                         std::to_string(kernel.dim(2)));
    if (kh % 2 == 0 || kw % 2 == 0) throw ShapeError("conv2d kernel sides must be odd");
    if (bias.size() != Cout) throw ShapeError("conv2d bias length must equal Cout");
    const std::ptrdiff_t ph = padding == Padding::same_zero ? static_cast<std::ptrdiff_t>(kh / 2) : 0;
    const std::ptrdiff_t pw = padding == Padding::same_zero ? static_cast<std::ptrdiff_t>(kw / 2) : 0;
    if (kh > H + 2 * ph || kw > W + 2 * pw) throw ShapeError("conv2d kernel larger than padded input");
    const std::size_t Ho = H + 2 * ph - kh + 1, Wo = W + 2 * pw - kw + 1;

    auto x = input.data();
    auto k = kernel.data();
    auto b = bias.data();
    std::vector<T> out(Ho * Wo * Cout);
    for (std::size_t oy = 0; oy < Ho; ++oy) {
        for (std::size_t ox = 0; ox < Wo; ++ox) {
            T* o = &out[(oy * Wo + ox) * Cout];
            std::copy(b.begin(), b.end(), o);
            for (std::size_t ky = 0; ky < kh; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - ph;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - pw;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                    const T* xi = &x[(static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * Cin];
                    const T* kk = &k[(ky * kw + kx) * Cin * Cout];
                    for (std::size_t ci = 0; ci < Cin; ++ci) {
                        const T v = xi[ci];
                        const T* wrow = kk + ci * Cout;
                        for (std::size_t co = 0; co < Cout; ++co) o[co] += v * wrow[co];
                    }
                }
            }
        }
    }
    return detail::record<T>("conv2d", {Ho, Wo, Cout}, std::move(out), {input, kernel, bias},
                             [=](Node<T>& self) {
        auto& ni = *self.inputs[0];
        auto& nk = *self.inputs[1];
        auto& nb = *self.inputs[2];
        for (std::size_t oy = 0; oy < Ho; ++oy) {
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                const T* g = &self.grad[(oy * Wo + ox) * Cout];
                if (nb.requires_grad)
                    for (std::size_t co = 0; co < Cout; ++co) nb.grad[co] += g[co];
                for (std::size_t ky = 0; ky < kh; ++ky) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - ph;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                    for (std::size_t kx = 0; kx < kw; ++kx) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - pw;
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                        const std::size_t ibase = (static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * Cin;
                        const std::size_t kbase = (ky * kw + kx) * Cin * Cout;
                        for (std::size_t ci = 0; ci < Cin; ++ci) {
                            const T* wrow = &nk.data[kbase + ci * Cout];
                            if (ni.requires_grad) {
                                T acc{0};
                                for (std::size_t co = 0; co < Cout; ++co) acc += g[co] * wrow[co];
                                ni.grad[ibase + ci] += acc;
                            }
                            if (nk.requires_grad) {
                                const T v = ni.data[ibase + ci];
                                T* gw = &nk.grad[kbase + ci * Cout];
                                for (std::size_t co = 0; co < Cout; ++co) gw[co] += v * g[co];
                            }
                        }
                    }
                }
            }
        }
    });
}

/// 2x2 max pooling, stride 2. Ties go to the first element in row-major scan.
template <class T>
BasicTensor<T> maxpool2(const BasicTensor<T>& input) {
    detail::require_spatial(input, "maxpool2");
    const std::size_t H = input.dim(0), W = input.dim(1), C = input.dim(2);
    if (H % 2 || W % 2) throw ShapeError("maxpool2 requires even spatial dimensions, got " + to_string(input.shape()));
    const std::size_t Ho = H / 2, Wo = W / 2;
    auto x = input.data();
    std::vector<T> out(Ho * Wo * C);
    std::vector<std::uint32_t> argmax(out.size());
    for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Wo; ++ox)
            for (std::size_t c = 0; c < C; ++c) {
                std::size_t best = ((2 * oy) * W + 2 * ox) * C + c;
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = ((2 * oy + dy) * W + 2 * ox + dx) * C + c;
                        if (x[idx] > x[best]) best = idx;
                    }
                const std::size_t o = (oy * Wo + ox) * C + c;
                out[o] = x[best];
                argmax[o] = static_cast<std::uint32_t>(best);
            }
    auto decisions = argmax;
    return detail::record<T>(
        "maxpool2", {Ho, Wo, C}, std::move(out), {input},
        [argmax = std::move(argmax)](Node<T>& self) {
            auto& in = *self.inputs[0];
            if (!in.requires_grad) return;
            for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[argmax[i]] += self.grad[i];
        },
        std::move(decisions));
}

template <class T>
BasicTensor<T> upsample_nearest2(const BasicTensor<T>& input) {
    detail::require_spatial(input, "upsample_nearest2");
    const std::size_t H = input.dim(0), W = input.dim(1), C = input.dim(2);
    const std::size_t Ho = 2 * H, Wo = 2 * W;
    auto x = input.data();
    std::vector<T> out(Ho * Wo * C);
    for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Wo; ++ox)
            for (std::size_t c = 0; c < C; ++c) out[(oy * Wo + ox) * C + c] = x[((oy / 2) * W + ox / 2) * C + c];
    return detail::record<T>("upsample_nearest2", {Ho, Wo, C}, std::move(out), {input}, [=](Node<T>& self) {
        auto& in = *self.inputs[0];
        if (!in.requires_grad) return;
        for (std::size_t oy = 0; oy < Ho; ++oy)
            for (std::size_t ox = 0; ox < Wo; ++ox)
                for (std::size_t c = 0; c < C; ++c)
                    in.grad[((oy / 2) * W + ox / 2) * C + c] += self.grad[(oy * Wo + ox) * C + c];
    });
}

template <class T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    detail::require_spatial(a, "concat_channels");
    detail::require_spatial(b, "concat_channels");
    if (a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1))
        throw ShapeError("concat_channels spatial mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    const std::size_t P = a.dim(0) * a.dim(1), Ca = a.dim(2), Cb = b.dim(2), C = Ca + Cb;
    std::vector<T> out(P * C);
    auto x = a.data();
    auto y = b.data();
    for (std::size_t p = 0; p < P; ++p) {
        std::copy_n(&x[p * Ca], Ca, &out[p * C]);
        std::copy_n(&y[p * Cb], Cb, &out[p * C + Ca]);
    }
    return detail::record<T>("concat_channels", {a.dim(0), a.dim(1), C}, std::move(out), {a, b}, [=](Node<T>& self) {
        auto& na = *self.inputs[0];
        auto& nb = *self.inputs[1];
        for (std::size_t p = 0; p < P; ++p) {
            if (na.requires_grad)
                for (std::size_t c = 0; c < Ca; ++c) na.grad[p * Ca + c] += self.grad[p * C + c];
            if (nb.requires_grad)
                for (std::size_t c = 0; c < Cb; ++c) nb.grad[p * Cb + c] += self.grad[p * C + Ca + c];
        }
    });
}

/// H x W x C -> C, mean over the spatial positions.
template <class T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& input) {
    detail::require_spatial(input, "global_avg_pool");
    const std::size_t P = input.dim(0) * input.dim(1), C = input.dim(2);
    const T inv = T{1} / static_cast<T>(P);
    auto x = input.data();
    std::vector<T> out(C, T{0});
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t c = 0; c < C; ++c) out[c] += x[p * C + c];
    for (auto& v : out) v *= inv;
    return detail::record<T>("global_avg_pool", {C}, std::move(out), {input}, [=](Node<T>& self) {
        auto& in = *self.inputs[0];
        if (!in.requires_grad) return;
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t c = 0; c < C; ++c) in.grad[p * C + c] += self.grad[c] * inv;
    });
}

/// Per-channel valid-mode filtering with a fixed (non-learned) window of
/// kh x kw weights. Used for the windowed statistics of SSIM.
template <class T>
BasicTensor<T> window_filter(const BasicTensor<T>& input, const std::vector<T>& window, std::size_t kh, std::size_t kw) {
    detail::require_spatial(input, "window_filter");
    if (window.size() != kh * kw) throw ShapeError("window_filter: window size does not match kh x kw");
    const std::size_t H = input.dim(0), W = input.dim(1), C = input.dim(2);
    if (kh > H || kw > W) throw ShapeError("window_filter: window larger than input " + to_string(input.shape()));
    const std::size_t Ho = H - kh + 1, Wo = W - kw + 1;
    auto x = input.data();
    std::vector<T> out(Ho * Wo * C, T{0});
    for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Wo; ++ox) {
            T* o = &out[(oy * Wo + ox) * C];
            for (std::size_t ky = 0; ky < kh; ++ky)
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const T w = window[ky * kw + kx];
                    const T* xi = &x[((oy + ky) * W + ox + kx) * C];
                    for (std::size_t c = 0; c < C; ++c) o[c] += w * xi[c];
                }
        }
    return detail::record<T>("window_filter", {Ho, Wo, C}, std::move(out), {input}, [=](Node<T>& self) {
        auto& in = *self.inputs[0];
        if (!in.requires_grad) return;
        for (std::size_t oy = 0; oy < Ho; ++oy)
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                const T* g = &self.grad[(oy * Wo + ox) * C];
                for (std::size_t ky = 0; ky < kh; ++ky)
                    for (std::size_t kx = 0; kx < kw; ++kx) {
                        const T w = window[ky * kw + kx];
                        T* gi = &in.grad[((oy + ky) * W + ox + kx) * C];
                        for (std::size_t c = 0; c < C; ++c) gi[c] += w * g[c];
                    }
            }
    });
}

// ---------------------------------------------------------------------------
// Dense / classification

/// x (n) . W (n x m) + b (m).
template <class T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
    if (x.rank() != 1 || weight.rank() != 2 || bias.rank() != 1)
        throw ShapeError("dense expects x[n], W[n x m], b[m]");
    const std::size_t n = x.dim(0), m = weight.dim(1);
    if (weight.dim(0) != n || bias.dim(0) != m)
        throw ShapeError("dense dimension mismatch: x " + to_string(x.shape()) + ", W " + to_string(weight.shape()) +
                         ", b " + to_string(bias.shape()));
    auto xv = x.data();
    auto w = weight.data();
    std::vector<T> out(bias.data().begin(), bias.data().end());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out[j] += xv[i] * w[i * m + j];
    return detail::record<T>("dense", {m}, std::move(out), {x, weight, bias}, [=](Node<T>& self) {
        auto& nx = *self.inputs[0];
        auto& nw = *self.inputs[1];
        auto& nb = *self.inputs[2];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (nx.requires_grad) nx.grad[i] += self.grad[j] * nw.data[i * m + j];
                if (nw.requires_grad) nw.grad[i * m + j] += nx.data[i] * self.grad[j];
            }
        if (nb.requires_grad)
            for (std::size_t j = 0; j < m; ++j) nb.grad[j] += self.grad[j];
    });
}

/// -log softmax(logits)[label], evaluated with max subtraction.
template <class T>
BasicTensor<T> softmax_cross_entropy(const BasicTensor<T>& logits, std::size_t label) {
    if (logits.rank() != 1 || logits.size() < 2) throw ShapeError("softmax_cross_entropy expects a vector of >= 2 logits");
    const std::size_t k = logits.size();
    if (label >= k) throw ArgumentError("label " + std::to_string(label) + " out of range [0, " + std::to_string(k) + ")");
    auto z = logits.data();
    const auto top = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    const T zmax = z[top];
    std::vector<T> prob(k);
    // The max term contributes exactly 1; summing the rest separately lets
    // log1p keep precision when one logit dominates.
    T rest{0};
    for (std::size_t i = 0; i < k; ++i) {
        prob[i] = std::exp(z[i] - zmax);
        if (i != top) rest += prob[i];
    }
    const T total = T{1} + rest;
    const T lse = std::log1p(rest);
    for (auto& p : prob) p /= total;
    const T loss = lse - (z[label] - zmax);
    return detail::record<T>("softmax_cross_entropy", {1}, {loss}, {logits}, [prob = std::move(prob), label](Node<T>& self) {
        auto& in = *self.inputs[0];
        if (!in.requires_grad) return;
        for (std::size_t i = 0; i < prob.size(); ++i)
            in.grad[i] += self.grad[0] * (prob[i] - (i == label ? T{1} : T{0}));
    });
}

template <class T>
std::size_t argmax(const BasicTensor<T>& t) {
    auto d = t.data();
    return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

} // namespace wssl
