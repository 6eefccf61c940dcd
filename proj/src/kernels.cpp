#include "sfcl/kernels.hpp"

#include <atomic>
#include <omp.h>

namespace sfcl {

namespace {
std::atomic<int> g_max_threads{0};  // 0 = OpenMP default
}

int max_threads() {
    const int n = g_max_threads.load(std::memory_order_relaxed);
    return n > 0 ? n : omp_get_max_threads();
}

void set_max_threads(int n) { g_max_threads.store(n, std::memory_order_relaxed); }

namespace kern {

namespace {
// Inner kernels stay serial when already inside a parallel region (batch- or
// client-level loops own the threads there).
inline bool par() { return sfcl::max_threads() > 1 && !omp_in_parallel(); }
}  // namespace

template <typename T>
Tensor<T> conv3x3_forward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b) {
    const int co_n = static_cast<int>(w.shape[0]);
    const int h = static_cast<int>(in.shape[1]);
    const int wd = static_cast<int>(in.shape[2]);
    Tensor<T> out({w.shape[0], in.shape[1], in.shape[2]});
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(static) if (par())
    for (int co = 0; co < co_n; ++co)
        detail::conv3x3_fwd_channel(in, w, b.v[co], co,
                                    &out.v[static_cast<size_t>(co) * h * wd]);
    return out;
}

template <typename T>
void conv3x3_backward_weights(const Tensor<T>& in, const Tensor<T>& gout,
                              Tensor<T>& dw, Tensor<T>& db) {
    const int co_n = static_cast<int>(gout.shape[0]);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(static) if (par())
    for (int co = 0; co < co_n; ++co)
        detail::conv3x3_bwd_w_channel(in, gout, co, dw, db);
}

template <typename T>
Tensor<T> conv3x3_backward_input(const Tensor<T>& w, const Tensor<T>& gout,
                                 const std::vector<std::uint32_t>& in_shape) {
    Tensor<T> din(in_shape);
    const int ci_n = static_cast<int>(in_shape[0]);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(static) if (par())
    for (int ci = 0; ci < ci_n; ++ci)
        detail::conv3x3_bwd_in_channel(w, gout, ci, din);
    return din;
}

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& logits) {
    Tensor<T> probs(logits.shape);
    const int h = static_cast<int>(logits.shape[1]);
    const int wd = static_cast<int>(logits.shape[2]);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(static) if (par())
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < wd; ++x)
            detail::softmax_pixel(logits, probs, y, x);
    return probs;
}

namespace ref {

ScalarField separable_blur(const ScalarField& f, const std::vector<double>& taps,
                           int radius) {
    ScalarField tmp(f.height, f.width), out(f.height, f.width);
    for (int y = 0; y < f.height; ++y)
        detail::blur_row(&f.v[static_cast<size_t>(y) * f.width],
                         &tmp.v[static_cast<size_t>(y) * f.width], f.width, taps, radius);
    for (int x = 0; x < f.width; ++x)
        detail::blur_col(tmp, out, x, taps, radius);
    return out;
}

}  // namespace ref

ScalarField separable_blur(const ScalarField& f, const std::vector<double>& taps,
                           int radius) {
    ScalarField tmp(f.height, f.width), out(f.height, f.width);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(static) if (par())
    for (int y = 0; y < f.height; ++y)
        detail::blur_row(&f.v[static_cast<size_t>(y) * f.width],
                         &tmp.v[static_cast<size_t>(y) * f.width], f.width, taps, radius);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(static) if (par())
    for (int x = 0; x < f.width; ++x)
        detail::blur_col(tmp, out, x, taps, radius);
    return out;
}

template Tensor<float> conv3x3_forward(const Tensor<float>&, const Tensor<float>&,
                                       const Tensor<float>&);
template Tensor<double> conv3x3_forward(const Tensor<double>&, const Tensor<double>&,
                                        const Tensor<double>&);
template void conv3x3_backward_weights(const Tensor<float>&, const Tensor<float>&,
                                       Tensor<float>&, Tensor<float>&);
template void conv3x3_backward_weights(const Tensor<double>&, const Tensor<double>&,
                                       Tensor<double>&, Tensor<double>&);
template Tensor<float> conv3x3_backward_input(const Tensor<float>&, const Tensor<float>&,
                                              const std::vector<std::uint32_t>&);
template Tensor<double> conv3x3_backward_input(const Tensor<double>&,
                                               const Tensor<double>&,
                                               const std::vector<std::uint32_t>&);
template Tensor<float> softmax_channels(const Tensor<float>&);
template Tensor<double> softmax_channels(const Tensor<double>&);

}  // namespace kern
}  // namespace sfcl
