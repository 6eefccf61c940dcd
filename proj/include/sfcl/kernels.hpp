#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sfcl/core.hpp"

// Data-parallel inner kernels. Every kernel comes in two flavours: the serial
// reference under kern::ref and the OpenMP version at kern:: scope (the one
// the rest of the library calls). The OpenMP versions parallelize only over
// fully independent output slices, with each output element accumulated in
// the same order as the reference, so both flavours produce bit-identical
// results for any thread count. tests/test_kernels.cpp asserts that;
// tools/bench_kernels.cpp compares their speed.

namespace sfcl::kern {

inline int clampi(int i, int lo, int hi) { return i < lo ? lo : (i > hi ? hi : i); }

namespace detail {

// Row-stencil helpers. Inner loops run over x with fixed shifts so the
// compiler can vectorize them; boundary columns are peeled off. Both kernel
// flavours call the same per-channel helpers, which pins down the floating
// point accumulation order and keeps serial and OpenMP results bit-identical.

// dst[x] += k0*src[x-1] + k1*src[x] + k2*src[x+1], replicate-clamped.
template <typename T>
inline void stencil_row_acc(T* dst, const T* src, int wd, T k0, T k1, T k2) {
    if (wd == 1) {
        dst[0] += k0 * src[0] + k1 * src[0] + k2 * src[0];
        return;
    }
    dst[0] += k0 * src[0] + k1 * src[0] + k2 * src[1];
    for (int x = 1; x < wd - 1; ++x)
        dst[x] += k0 * src[x - 1] + k1 * src[x] + k2 * src[x + 1];
    dst[wd - 1] += k0 * src[wd - 2] + k1 * src[wd - 1] + k2 * src[wd - 1];
}

// One output channel plane of the forward convolution.
template <typename T>
inline void conv3x3_fwd_channel(const Tensor<T>& in, const Tensor<T>& w, T bias,
                                int co, T* out_plane) {
    const int ci_n = static_cast<int>(in.shape[0]);
    const int h = static_cast<int>(in.shape[1]);
    const int wd = static_cast<int>(in.shape[2]);
    for (int i = 0; i < h * wd; ++i) out_plane[i] = bias;
    for (int ci = 0; ci < ci_n; ++ci) {
        const T* k = &w.v[(static_cast<size_t>(co) * ci_n + ci) * 9];
        for (int ky = 0; ky < 3; ++ky) {
            const T k0 = k[ky * 3 + 0], k1 = k[ky * 3 + 1], k2 = k[ky * 3 + 2];
            for (int y = 0; y < h; ++y) {
                const int iy = clampi(y + ky - 1, 0, h - 1);
                const T* src = &in.v[(static_cast<size_t>(ci) * h + iy) * wd];
                stencil_row_acc(out_plane + static_cast<size_t>(y) * wd, src, wd,
                                k0, k1, k2);
            }
        }
    }
}

// Weight/bias gradient for one output channel.
template <typename T>
inline void conv3x3_bwd_w_channel(const Tensor<T>& in, const Tensor<T>& gout,
                                  int co, Tensor<T>& dw, Tensor<T>& db) {
    const int ci_n = static_cast<int>(in.shape[0]);
    const int h = static_cast<int>(in.shape[1]);
    const int wd = static_cast<int>(in.shape[2]);
    const T* gplane = &gout.v[static_cast<size_t>(co) * h * wd];
    T bacc = T(0);
#pragma omp simd reduction(+ : bacc)
    for (int i = 0; i < h * wd; ++i) bacc += gplane[i];
    db.v[co] += bacc;
    for (int ci = 0; ci < ci_n; ++ci) {
        T* k = &dw.v[(static_cast<size_t>(co) * ci_n + ci) * 9];
        for (int ky = 0; ky < 3; ++ky) {
            T a0 = T(0), a1 = T(0), a2 = T(0);
            for (int y = 0; y < h; ++y) {
                const int iy = clampi(y + ky - 1, 0, h - 1);
                const T* src = &in.v[(static_cast<size_t>(ci) * h + iy) * wd];
                const T* g = gplane + static_cast<size_t>(y) * wd;
                if (wd == 1) {
                    a0 += g[0] * src[0];
                    a1 += g[0] * src[0];
                    a2 += g[0] * src[0];
                    continue;
                }
                a0 += g[0] * src[0];
                a1 += g[0] * src[0];
                a2 += g[0] * src[1];
#pragma omp simd reduction(+ : a0, a1, a2)
                for (int x = 1; x < wd - 1; ++x) {
                    a0 += g[x] * src[x - 1];
                    a1 += g[x] * src[x];
                    a2 += g[x] * src[x + 1];
                }
                a0 += g[wd - 1] * src[wd - 2];
                a1 += g[wd - 1] * src[wd - 1];
                a2 += g[wd - 1] * src[wd - 1];
            }
            k[ky * 3 + 0] += a0;
            k[ky * 3 + 1] += a1;
            k[ky * 3 + 2] += a2;
        }
    }
}

// Input gradient restricted to one input channel (scatter with shifts; safe
// to run per-ci in parallel since channels never alias).
template <typename T>
inline void conv3x3_bwd_in_channel(const Tensor<T>& w, const Tensor<T>& gout,
                                   int ci, Tensor<T>& din) {
    const int co_n = static_cast<int>(gout.shape[0]);
    const int ci_n = static_cast<int>(din.shape[0]);
    const int h = static_cast<int>(din.shape[1]);
    const int wd = static_cast<int>(din.shape[2]);
    T* dplane = &din.v[static_cast<size_t>(ci) * h * wd];
    for (int co = 0; co < co_n; ++co) {
        const T* k = &w.v[(static_cast<size_t>(co) * ci_n + ci) * 9];
        const T* gplane = &gout.v[static_cast<size_t>(co) * h * wd];
        for (int ky = 0; ky < 3; ++ky) {
            const T k0 = k[ky * 3 + 0], k1 = k[ky * 3 + 1], k2 = k[ky * 3 + 2];
            for (int y = 0; y < h; ++y) {
                const int iy = clampi(y + ky - 1, 0, h - 1);
                T* drow = dplane + static_cast<size_t>(iy) * wd;
                const T* g = gplane + static_cast<size_t>(y) * wd;
                if (wd == 1) {
                    drow[0] += k0 * g[0];
                    drow[0] += k1 * g[0];
                    drow[0] += k2 * g[0];
                    continue;
                }
                drow[0] += k0 * g[0];
                for (int x = 1; x < wd; ++x) drow[x - 1] += k0 * g[x];
                for (int x = 0; x < wd; ++x) drow[x] += k1 * g[x];
                for (int x = 0; x < wd - 1; ++x) drow[x + 1] += k2 * g[x];
                drow[wd - 1] += k2 * g[wd - 1];
            }
        }
    }
}

// Stable per-pixel softmax over the channel axis.
template <typename T>
inline void softmax_pixel(const Tensor<T>& logits, Tensor<T>& probs, int y, int x) {
    const int c_n = static_cast<int>(logits.shape[0]);
    T m = logits.at3(0, y, x);
    for (int c = 1; c < c_n; ++c) m = std::max(m, logits.at3(c, y, x));
    T denom = T(0);
    for (int c = 0; c < c_n; ++c) {
        const T e = std::exp(logits.at3(c, y, x) - m);
        probs.at3(c, y, x) = e;
        denom += e;
    }
    for (int c = 0; c < c_n; ++c) probs.at3(c, y, x) /= denom;
}

// Horizontal pass of a separable 1D convolution, replicate padding.
inline void blur_row(const double* src, double* dst, int w,
                     const std::vector<double>& taps, int radius) {
    for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t)
            acc += taps[t + radius] * src[clampi(x + t, 0, w - 1)];
        dst[x] = acc;
    }
}

inline void blur_col(const ScalarField& src, ScalarField& dst, int x,
                     const std::vector<double>& taps, int radius) {
    const int h = src.height;
    for (int y = 0; y < h; ++y) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t)
            acc += taps[t + radius] * src.at(clampi(y + t, 0, h - 1), x);
        dst.at(y, x) = acc;
    }
}

}  // namespace detail

// ---- serial reference ----
namespace ref {

template <typename T>
Tensor<T> conv3x3_forward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b) {
    const int co_n = static_cast<int>(w.shape[0]);
    const int h = static_cast<int>(in.shape[1]);
    const int wd = static_cast<int>(in.shape[2]);
    Tensor<T> out({w.shape[0], in.shape[1], in.shape[2]});
    for (int co = 0; co < co_n; ++co)
        detail::conv3x3_fwd_channel(in, w, b.v[co], co,
                                    &out.v[static_cast<size_t>(co) * h * wd]);
    return out;
}

template <typename T>
void conv3x3_backward_weights(const Tensor<T>& in, const Tensor<T>& gout,
                              Tensor<T>& dw, Tensor<T>& db) {
    const int co_n = static_cast<int>(gout.shape[0]);
    for (int co = 0; co < co_n; ++co)
        detail::conv3x3_bwd_w_channel(in, gout, co, dw, db);
}

template <typename T>
Tensor<T> conv3x3_backward_input(const Tensor<T>& w, const Tensor<T>& gout,
                                 const std::vector<std::uint32_t>& in_shape) {
    Tensor<T> din(in_shape);
    const int ci_n = static_cast<int>(in_shape[0]);
    for (int ci = 0; ci < ci_n; ++ci)
        detail::conv3x3_bwd_in_channel(w, gout, ci, din);
    return din;
}

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& logits) {
    Tensor<T> probs(logits.shape);
    const int h = static_cast<int>(logits.shape[1]);
    const int wd = static_cast<int>(logits.shape[2]);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < wd; ++x)
            detail::softmax_pixel(logits, probs, y, x);
    return probs;
}

ScalarField separable_blur(const ScalarField& f, const std::vector<double>& taps,
                           int radius);

}  // namespace ref

// ---- OpenMP versions (bit-identical to ref) ----

template <typename T>
Tensor<T> conv3x3_forward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b);

template <typename T>
void conv3x3_backward_weights(const Tensor<T>& in, const Tensor<T>& gout,
                              Tensor<T>& dw, Tensor<T>& db);

template <typename T>
Tensor<T> conv3x3_backward_input(const Tensor<T>& w, const Tensor<T>& gout,
                                 const std::vector<std::uint32_t>& in_shape);

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& logits);

ScalarField separable_blur(const ScalarField& f, const std::vector<double>& taps,
                           int radius);

}  // namespace sfcl::kern
