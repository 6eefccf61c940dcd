#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sfcl/core.hpp"
#include "sfcl/nn.hpp"

// Reliable/unreliable sample handling and the trainable-weight total loss.
// Everything here is a pure function of its inputs: partitions, corrected
// labels and EMA scales are resolved by the caller and treated as constants,
// which keeps the loss differentiable and lets tests check gradients by
// finite differences.

namespace sfcl::proto {

struct Partition {
    std::vector<int> reliable;    // student and teacher loss <= tau
    std::vector<int> unreliable;  // student and teacher loss > tau
    std::vector<int> undecided;   // mixed; trained as reliable, excluded from stats
};

// Index split by the global threshold tau.
Partition split_reliable(const std::vector<double>& student_losses,
                         const std::vector<double>& teacher_losses, double tau);

// Running scales used to normalize the three loss terms. A term's scale is
// seeded from the first raw value it sees and then tracks it with the given
// decay; the floor guards terms that collapse to zero.
struct LossScales {
    double re = -1.0, un = -1.0, cons = -1.0;  // -1 = unset
    static constexpr double kFloor = 1e-8;

    static double resolve(double ema, double raw) {
        return std::max(ema < 0.0 ? raw : ema, kFloor);
    }
    static void update(double& ema, double raw, double decay) {
        ema = ema < 0.0 ? raw : decay * ema + (1.0 - decay) * raw;
    }
};

// Per-pixel label correction on the difference mask R (pixels where the
// student argmax, teacher argmax and given label are not unanimous): adopt
// the student prediction where its confidence exceeds T, else the teacher's
// where its confidence exceeds T, else keep the label.
template <typename T>
LabelMask correct_labels(const Tensor<T>& probs_student, const Tensor<T>& probs_teacher,
                         const LabelMask& label, double threshold) {
    const int c_n = static_cast<int>(probs_student.shape[0]);
    const int hw = static_cast<int>(probs_student.shape[1] * probs_student.shape[2]);
    LabelMask out = label;
    for (int u = 0; u < hw; ++u) {
        int ps = 0, pt = 0;
        T ms = probs_student.v[u], mt = probs_teacher.v[u];
        for (int c = 1; c < c_n; ++c) {
            const T vs = probs_student.v[static_cast<size_t>(c) * hw + u];
            const T vt = probs_teacher.v[static_cast<size_t>(c) * hw + u];
            if (vs > ms) { ms = vs; ps = c; }
            if (vt > mt) { mt = vt; pt = c; }
        }
        const int y = label.v[u];
        if (ps == pt && pt == y) continue;  // outside R
        if (static_cast<double>(ms) > threshold)
            out.v[u] = static_cast<std::uint8_t>(ps);
        else if (static_cast<double>(mt) > threshold)
            out.v[u] = static_cast<std::uint8_t>(pt);
        // else keep the given label
    }
    return out;
}

// Linear warm-up s(t) = min(1, t / warmup_rounds); s(0) = 0.
double warmup(long t, long warmup_rounds);

template <typename T>
struct TotalLossResult {
    double loss = 0.0;
    nn::SplitParams<T> grads;
    double du_un = 0.0, du_cons = 0.0;  // gradients of the logits
    double raw_re = 0.0, raw_un = 0.0, raw_cons = 0.0;
    long n_re = 0, n_un = 0;
};

// L_total = Lhat_re + w_un * Lhat_un + w_cons * Lhat_cons
//           + eta * (u_un^2 + u_cons^2),
// with w = sigmoid(u) * s_t, Lhat = raw / scale, scales frozen. The reliable
// term runs over reliable + undecided with the given labels; the unreliable
// term over unreliable with corrected labels; the consistency term compares
// the student on perturbed inputs against the (constant) teacher on the
// originals over the whole batch. Throws EmptyBatch when both the reliable
// and unreliable sets are empty.
template <typename T>
TotalLossResult<T> compute_total_loss(
    const nn::SplitParams<T>& params, const std::vector<nn::ForwardCache<T>>& caches_x,
    const std::vector<Tensor<T>>& teacher_probs,
    const std::vector<nn::ForwardCache<T>>& caches_xp, const Partition& part,
    const std::vector<LabelMask>& labels, const std::vector<LabelMask>& corrected,
    double u_un, double u_cons, double s_t, double scale_re, double scale_un,
    double scale_cons, double eta, bool use_consistency) {
    if (part.reliable.empty() && part.unreliable.empty())
        throw EmptyBatch("compute_total_loss: no reliable or unreliable samples");

    TotalLossResult<T> res;
    const double w_un = nn::sigmoid(u_un) * s_t;
    const double w_cons = nn::sigmoid(u_cons) * s_t;

    std::vector<int> trained_reliable = part.reliable;
    trained_reliable.insert(trained_reliable.end(), part.undecided.begin(),
                            part.undecided.end());
    std::sort(trained_reliable.begin(), trained_reliable.end());
    res.n_re = static_cast<long>(trained_reliable.size());
    res.n_un = static_cast<long>(part.unreliable.size());

    std::vector<std::pair<int, Tensor<T>>> dprobs;
    dprobs.reserve(trained_reliable.size() + part.unreliable.size());

    if (res.n_re > 0) {
        double acc = 0.0;
        const T coef = static_cast<T>(1.0 / (scale_re * static_cast<double>(res.n_re)));
        for (int k : trained_reliable) {
            acc += static_cast<double>(nn::dice_loss(caches_x[k].probs, labels[k]));
            Tensor<T> g = nn::dice_loss_grad(caches_x[k].probs, labels[k]);
            for (auto& v : g.v) v *= coef;
            dprobs.emplace_back(k, std::move(g));
        }
        res.raw_re = acc / static_cast<double>(res.n_re);
    }
    if (res.n_un > 0) {
        double acc = 0.0;
        const T coef =
            static_cast<T>(w_un / (scale_un * static_cast<double>(res.n_un)));
        for (int k : part.unreliable) {
            acc += static_cast<double>(nn::dice_loss(caches_x[k].probs, corrected[k]));
            if (w_un != 0.0) {
                Tensor<T> g = nn::dice_loss_grad(caches_x[k].probs, corrected[k]);
                for (auto& v : g.v) v *= coef;
                dprobs.emplace_back(k, std::move(g));
            }
        }
        res.raw_un = acc / static_cast<double>(res.n_un);
    }
    res.grads = nn::backward_batch(params, caches_x, dprobs);

    if (use_consistency && !caches_xp.empty()) {
        std::vector<const Tensor<T>*> sp, tp;
        for (size_t k = 0; k < caches_xp.size(); ++k) {
            sp.push_back(&caches_xp[k].probs);
            tp.push_back(&teacher_probs[k]);
        }
        res.raw_cons = static_cast<double>(nn::consistency_loss(sp, tp));
        if (w_cons != 0.0) {
            size_t total_elems = 0;
            for (const auto* t : sp) total_elems += t->v.size();
            const T coef = static_cast<T>(2.0 * w_cons / (scale_cons * total_elems));
            std::vector<std::pair<int, Tensor<T>>> dp;
            dp.reserve(caches_xp.size());
            for (size_t k = 0; k < caches_xp.size(); ++k) {
                Tensor<T> g(caches_xp[k].probs.shape);
                for (size_t i = 0; i < g.v.size(); ++i)
                    g.v[i] = coef * (caches_xp[k].probs.v[i] - teacher_probs[k].v[i]);
                dp.emplace_back(static_cast<int>(k), std::move(g));
            }
            nn::SplitParams<T> gc = nn::backward_batch(params, caches_xp, dp);
            std::vector<const Tensor<T>*> src;
            nn::for_each_tensor(gc, [&](const Tensor<T>& t) { src.push_back(&t); });
            size_t i = 0;
            nn::for_each_tensor(res.grads, [&](Tensor<T>& t) {
                const Tensor<T>& s = *src[i++];
                for (size_t j = 0; j < t.v.size(); ++j) t.v[j] += s.v[j];
            });
        }
    }

    res.loss = res.raw_re / scale_re + w_un * (res.raw_un / scale_un) +
               w_cons * (res.raw_cons / scale_cons) +
               eta * (u_un * u_un + u_cons * u_cons);
    const auto dsig = [](double u) {
        const double s = nn::sigmoid(u);
        return s * (1.0 - s);
    };
    res.du_un = dsig(u_un) * s_t * (res.raw_un / scale_un) + 2.0 * eta * u_un;
    res.du_cons = dsig(u_cons) * s_t * (res.raw_cons / scale_cons) + 2.0 * eta * u_cons;
    return res;
}

}  // namespace sfcl::proto
