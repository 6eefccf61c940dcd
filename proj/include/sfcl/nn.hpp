#pragma once

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "sfcl/core.hpp"
#include "sfcl/kernels.hpp"
#include "sfcl/rng.hpp"

// Toy split segmentation network: FE (conv-relu) on the client, S
// (conv-relu-conv-relu) on the server, BE (conv-softmax) on the client.
// Stride 1, 3x3 kernels, replicate padding, so the spatial dims never change.
// Forward/backward are hand-written; tests check every gradient against
// central finite differences.

namespace sfcl::nn {

struct NetConfig {
    std::uint32_t in_channels = 1;
    std::uint32_t classes = 3;
    std::uint32_t fe_channels = 8;
    std::uint32_t s_channels = 16;
};

template <typename T>
struct SplitParams {
    std::vector<Tensor<T>> fe;  // {W (Cfe,Cin,3,3), b (Cfe)}
    std::vector<Tensor<T>> s;   // {W (Cs,Cfe,3,3), b (Cs), W (Cfe,Cs,3,3), b (Cfe)}
    std::vector<Tensor<T>> be;  // {W (C,Cfe,3,3), b (C)}
};

// Fixed traversal order fe, s, be; used by the optimizer, EMA, aggregation
// and the wire layer, which all rely on it being stable.
template <typename T, typename F>
void for_each_tensor(SplitParams<T>& p, F&& f) {
    for (auto& t : p.fe) f(t);
    for (auto& t : p.s) f(t);
    for (auto& t : p.be) f(t);
}
template <typename T, typename F>
void for_each_tensor(const SplitParams<T>& p, F&& f) {
    for (const auto& t : p.fe) f(t);
    for (const auto& t : p.s) f(t);
    for (const auto& t : p.be) f(t);
}

template <typename T>
SplitParams<T> zeros_like(const SplitParams<T>& p) {
    SplitParams<T> z = p;
    for_each_tensor(z, [](Tensor<T>& t) { std::fill(t.v.begin(), t.v.end(), T(0)); });
    return z;
}

template <typename T>
SplitParams<T> init_params(const NetConfig& cfg, std::uint64_t seed) {
    SplitParams<T> p;
    p.fe = {Tensor<T>({cfg.fe_channels, cfg.in_channels, 3, 3}),
            Tensor<T>({cfg.fe_channels})};
    p.s = {Tensor<T>({cfg.s_channels, cfg.fe_channels, 3, 3}),
           Tensor<T>({cfg.s_channels}),
           Tensor<T>({cfg.fe_channels, cfg.s_channels, 3, 3}),
           Tensor<T>({cfg.fe_channels})};
    p.be = {Tensor<T>({cfg.classes, cfg.fe_channels, 3, 3}), Tensor<T>({cfg.classes})};

    auto rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for_each_tensor(p, [&](Tensor<T>& t) {
        if (t.shape.size() == 4) {
            const double scale = std::sqrt(2.0 / (9.0 * t.shape[1]));
            for (auto& x : t.v) x = static_cast<T>(scale * normal(rng));
        } else {
            for (auto& x : t.v) x = static_cast<T>(0.01);  // nudge relus awake
        }
    });
    return p;
}

template <typename T>
struct ForwardCache {
    Tensor<T> x;
    Tensor<T> z1, a1;      // FE
    Tensor<T> z2, a2;      // S first conv
    Tensor<T> z3, a3;      // S second conv
    Tensor<T> logits;      // BE pre-softmax
    Tensor<T> probs;       // per-pixel softmax
};

template <typename T>
Tensor<T> relu(const Tensor<T>& z) {
    Tensor<T> a = z;
    for (auto& x : a.v) x = x > T(0) ? x : T(0);
    return a;
}

// Stage forwards, exposed separately so the protocol layer can mirror the
// FE -> server -> BE exchange.
template <typename T>
void fe_forward(const SplitParams<T>& p, const Tensor<T>& x, Tensor<T>& z1,
                Tensor<T>& a1) {
    z1 = kern::conv3x3_forward(x, p.fe[0], p.fe[1]);
    a1 = relu(z1);
}

template <typename T>
void s_forward(const SplitParams<T>& p, const Tensor<T>& a1, Tensor<T>& z2,
               Tensor<T>& a2, Tensor<T>& z3, Tensor<T>& a3) {
    z2 = kern::conv3x3_forward(a1, p.s[0], p.s[1]);
    a2 = relu(z2);
    z3 = kern::conv3x3_forward(a2, p.s[2], p.s[3]);
    a3 = relu(z3);
}

template <typename T>
void be_forward(const SplitParams<T>& p, const Tensor<T>& a3, Tensor<T>& logits,
                Tensor<T>& probs) {
    logits = kern::conv3x3_forward(a3, p.be[0], p.be[1]);
    probs = kern::softmax_channels(logits);
}

template <typename T>
ForwardCache<T> forward_one(const SplitParams<T>& p, const Tensor<T>& x) {
    if (x.shape.size() != 3 || x.shape[0] != p.fe[0].shape[1])
        throw ShapeError("forward: input shape does not match FE weights");
    ForwardCache<T> c;
    c.x = x;
    fe_forward(p, c.x, c.z1, c.a1);
    s_forward(p, c.a1, c.z2, c.a2, c.z3, c.a3);
    be_forward(p, c.a3, c.logits, c.probs);
    return c;
}

// Same computation as forward_one but written as one uninterrupted pass;
// kept for the split-vs-monolithic equivalence check.
template <typename T>
Tensor<T> forward_monolithic(const SplitParams<T>& p, const Tensor<T>& x) {
    Tensor<T> t = relu(kern::conv3x3_forward(x, p.fe[0], p.fe[1]));
    t = relu(kern::conv3x3_forward(t, p.s[0], p.s[1]));
    t = relu(kern::conv3x3_forward(t, p.s[2], p.s[3]));
    t = kern::conv3x3_forward(t, p.be[0], p.be[1]);
    return kern::softmax_channels(t);
}

template <typename T>
std::vector<ForwardCache<T>> forward_split(const SplitParams<T>& p,
                                           const std::vector<Tensor<T>>& xs) {
    std::vector<ForwardCache<T>> caches(xs.size());
    const int n = static_cast<int>(xs.size());
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(dynamic) if (sfcl::max_threads() > 1)
    for (int i = 0; i < n; ++i) caches[i] = forward_one(p, xs[i]);
    return caches;
}

// ---- losses ----

// Soft multiclass Dice loss, smoothing s = 1, averaged over all classes
// (background included). Value in [0,1].
template <typename T>
T dice_loss(const Tensor<T>& probs, const LabelMask& y, T smooth = T(1)) {
    const int c_n = static_cast<int>(probs.shape[0]);
    const int hw = static_cast<int>(probs.shape[1] * probs.shape[2]);
    T acc = T(0);
    for (int c = 0; c < c_n; ++c) {
        T inter = T(0), psum = T(0);
        long ysum = 0;
        const T* pc = &probs.v[static_cast<size_t>(c) * hw];
        for (int u = 0; u < hw; ++u) {
            psum += pc[u];
            if (y.v[u] == c) {
                inter += pc[u];
                ++ysum;
            }
        }
        acc += (T(2) * inter + smooth) / (psum + static_cast<T>(ysum) + smooth);
    }
    return T(1) - acc / static_cast<T>(c_n);
}

// d(dice_loss)/d(probs).
template <typename T>
Tensor<T> dice_loss_grad(const Tensor<T>& probs, const LabelMask& y, T smooth = T(1)) {
    const int c_n = static_cast<int>(probs.shape[0]);
    const int hw = static_cast<int>(probs.shape[1] * probs.shape[2]);
    Tensor<T> g(probs.shape);
    for (int c = 0; c < c_n; ++c) {
        T inter = T(0), psum = T(0);
        long ysum = 0;
        const T* pc = &probs.v[static_cast<size_t>(c) * hw];
        for (int u = 0; u < hw; ++u) {
            psum += pc[u];
            if (y.v[u] == c) {
                inter += pc[u];
                ++ysum;
            }
        }
        const T denom = psum + static_cast<T>(ysum) + smooth;
        const T num = T(2) * inter + smooth;
        T* gc = &g.v[static_cast<size_t>(c) * hw];
        for (int u = 0; u < hw; ++u) {
            const T dnum = (y.v[u] == c) ? T(2) : T(0);
            gc[u] = -(dnum * denom - num) / (denom * denom) / static_cast<T>(c_n);
        }
    }
    return g;
}

template <typename T>
std::vector<T> region_loss_per_sample(const std::vector<ForwardCache<T>>& caches,
                                      const std::vector<LabelMask>& labels) {
    std::vector<T> losses(caches.size());
    for (size_t i = 0; i < caches.size(); ++i)
        losses[i] = dice_loss(caches[i].probs, labels[i]);
    return losses;
}

// Mean squared difference over samples, classes and pixels. The second
// argument is the (constant) teacher side.
template <typename T>
T consistency_loss(const std::vector<const Tensor<T>*>& student,
                   const std::vector<const Tensor<T>*>& teacher) {
    double acc = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < student.size(); ++i) {
        const auto& a = *student[i];
        const auto& b = *teacher[i];
        for (size_t u = 0; u < a.v.size(); ++u) {
            const double d = static_cast<double>(a.v[u]) - static_cast<double>(b.v[u]);
            acc += d * d;
        }
        count += a.v.size();
    }
    return count ? static_cast<T>(acc / static_cast<double>(count)) : T(0);
}

// ---- backward ----

namespace detail {

// dL/dlogits from dL/dprobs through the per-pixel softmax.
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& probs, const Tensor<T>& dprobs) {
    const int c_n = static_cast<int>(probs.shape[0]);
    const int hw = static_cast<int>(probs.shape[1] * probs.shape[2]);
    Tensor<T> dlogits(probs.shape);
    for (int u = 0; u < hw; ++u) {
        T dot = T(0);
        for (int c = 0; c < c_n; ++c)
            dot += dprobs.v[static_cast<size_t>(c) * hw + u] *
                   probs.v[static_cast<size_t>(c) * hw + u];
        for (int c = 0; c < c_n; ++c) {
            const size_t i = static_cast<size_t>(c) * hw + u;
            dlogits.v[i] = probs.v[i] * (dprobs.v[i] - dot);
        }
    }
    return dlogits;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& z, const Tensor<T>& da) {
    Tensor<T> dz = da;
    for (size_t i = 0; i < dz.v.size(); ++i)
        if (z.v[i] <= T(0)) dz.v[i] = T(0);
    return dz;
}

}  // namespace detail

// Analytic gradients of a scalar loss w.r.t. every parameter, given
// dL/dprobs for one sample. BE gradients first, then activation gradients
// flow back through S and FE, mirroring the split.
template <typename T>
SplitParams<T> backward_split(const SplitParams<T>& p, const ForwardCache<T>& cache,
                              const Tensor<T>& dprobs) {
    const bool stale =
        cache.probs.shape != dprobs.shape || cache.probs.shape.size() != 3 ||
        cache.x.shape.size() != 3 || cache.x.shape[0] != p.fe[0].shape[1] ||
        cache.a1.shape[0] != p.s[0].shape[1] || cache.a2.shape[0] != p.s[2].shape[1] ||
        cache.a3.shape[0] != p.be[0].shape[1] ||
        cache.probs.shape[0] != p.be[0].shape[0];
    if (stale) throw CacheError("backward_split: cache does not match parameters");

    SplitParams<T> g = zeros_like(p);
    // BE
    const Tensor<T> dlogits = detail::softmax_backward(cache.probs, dprobs);
    kern::conv3x3_backward_weights(cache.a3, dlogits, g.be[0], g.be[1]);
    Tensor<T> da3 = kern::conv3x3_backward_input(p.be[0], dlogits, cache.a3.shape);
    // S
    Tensor<T> dz3 = detail::relu_backward(cache.z3, da3);
    kern::conv3x3_backward_weights(cache.a2, dz3, g.s[2], g.s[3]);
    Tensor<T> da2 = kern::conv3x3_backward_input(p.s[2], dz3, cache.a2.shape);
    Tensor<T> dz2 = detail::relu_backward(cache.z2, da2);
    kern::conv3x3_backward_weights(cache.a1, dz2, g.s[0], g.s[1]);
    Tensor<T> da1 = kern::conv3x3_backward_input(p.s[0], dz2, cache.a1.shape);
    // FE
    Tensor<T> dz1 = detail::relu_backward(cache.z1, da1);
    kern::conv3x3_backward_weights(cache.x, dz1, g.fe[0], g.fe[1]);
    return g;
}

// Batched backward: per-sample gradients in parallel, summed in list order.
template <typename T>
SplitParams<T> backward_batch(const SplitParams<T>& p,
                              const std::vector<ForwardCache<T>>& caches,
                              const std::vector<std::pair<int, Tensor<T>>>& dprobs) {
    SplitParams<T> total = zeros_like(p);
    const int n = static_cast<int>(dprobs.size());
    std::vector<SplitParams<T>> per(n);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(dynamic) if (sfcl::max_threads() > 1)
    for (int i = 0; i < n; ++i)
        per[i] = backward_split(p, caches[dprobs[i].first], dprobs[i].second);
    for (int i = 0; i < n; ++i) {
        auto it = per[i];
        std::vector<Tensor<T>*> dst, src;
        for_each_tensor(total, [&](Tensor<T>& t) { dst.push_back(&t); });
        for_each_tensor(it, [&](Tensor<T>& t) { src.push_back(&t); });
        for (size_t k = 0; k < dst.size(); ++k)
            for (size_t j = 0; j < dst[k]->v.size(); ++j) dst[k]->v[j] += src[k]->v[j];
    }
    return total;
}

// ---- optimizer / teacher ----

template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m, v;
    long t = 0;
};

template <typename T>
AdamState<T> make_adam_state(const SplitParams<T>& p) {
    AdamState<T> s;
    for_each_tensor(p, [&](const Tensor<T>& t) {
        s.m.push_back(Tensor<T>(t.shape));
        s.v.push_back(Tensor<T>(t.shape));
    });
    return s;
}

template <typename T>
void adam_step(SplitParams<T>& params, const SplitParams<T>& grads, AdamState<T>& st,
               T lr, T beta1 = T(0.9), T beta2 = T(0.999), T eps = T(1e-8)) {
    ++st.t;
    const T bc1 = T(1) - std::pow(beta1, static_cast<T>(st.t));
    const T bc2 = T(1) - std::pow(beta2, static_cast<T>(st.t));
    size_t k = 0;
    std::vector<const Tensor<T>*> gs;
    for_each_tensor(grads, [&](const Tensor<T>& t) { gs.push_back(&t); });
    for_each_tensor(params, [&](Tensor<T>& t) {
        Tensor<T>& m = st.m[k];
        Tensor<T>& v = st.v[k];
        const Tensor<T>& g = *gs[k];
        for (size_t i = 0; i < t.v.size(); ++i) {
            m.v[i] = beta1 * m.v[i] + (T(1) - beta1) * g.v[i];
            v.v[i] = beta2 * v.v[i] + (T(1) - beta2) * g.v[i] * g.v[i];
            const T mh = m.v[i] / bc1;
            const T vh = v.v[i] / bc2;
            t.v[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
        ++k;
    });
}

// Scalar Adam for the two loss-weight logits.
struct ScalarAdam {
    double m = 0, v = 0;
    long t = 0;
    void step(double& x, double g, double lr, double beta1 = 0.9,
              double beta2 = 0.999, double eps = 1e-8) {
        ++t;
        m = beta1 * m + (1 - beta1) * g;
        v = beta2 * v + (1 - beta2) * g * g;
        const double mh = m / (1 - std::pow(beta1, t));
        const double vh = v / (1 - std::pow(beta2, t));
        x -= lr * mh / (std::sqrt(vh) + eps);
    }
};

template <typename T>
void ema_update(SplitParams<T>& teacher, const SplitParams<T>& student, T decay) {
    std::vector<const Tensor<T>*> src;
    for_each_tensor(student, [&](const Tensor<T>& t) { src.push_back(&t); });
    size_t k = 0;
    for_each_tensor(teacher, [&](Tensor<T>& t) {
        const Tensor<T>& s = *src[k++];
        for (size_t i = 0; i < t.v.size(); ++i)
            t.v[i] = decay * t.v[i] + (T(1) - decay) * s.v[i];
    });
}

// Photometric perturbation: per-pixel Gaussian noise scaled by the image
// value range plus one uniform brightness shift per sample. Geometry is
// untouched so the outputs stay pixel-aligned with the originals.
template <typename T>
std::vector<Tensor<T>> perturb(const std::vector<Tensor<T>>& xs, std::uint64_t seed,
                               double noise_std_frac = 0.05,
                               double shift_range = 0.1) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(-shift_range, shift_range);
    std::vector<Tensor<T>> out = xs;
    for (auto& x : out) {
        double lo = x.v.empty() ? 0.0 : static_cast<double>(x.v[0]);
        double hi = lo;
        for (auto v : x.v) {
            lo = std::min(lo, static_cast<double>(v));
            hi = std::max(hi, static_cast<double>(v));
        }
        const double std_dev = noise_std_frac * (hi - lo);
        const double shift = shift_range > 0.0 ? uniform(rng) : 0.0;
        for (auto& v : x.v)
            v = static_cast<T>(static_cast<double>(v) + shift +
                               (std_dev > 0.0 ? std_dev * normal(rng) : 0.0));
    }
    return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace sfcl::nn
