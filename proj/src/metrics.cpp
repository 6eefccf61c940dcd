#include "sfcl/metrics.hpp"

namespace sfcl::metrics {

void Confusion::add(const LabelMask& pred, const LabelMask& truth) {
    const int classes = static_cast<int>(tp.size());
    for (size_t u = 0; u < pred.v.size(); ++u) {
        const int p = pred.v[u], t = truth.v[u];
        ++total_pixels;
        if (p == t) {
            ++correct_pixels;
            if (p < classes) ++tp[p];
        } else {
            if (p < classes) ++fp[p];
            if (t < classes) ++fn[t];
        }
    }
}

MetricSet metrics_from_confusion(const Confusion& c) {
    const int classes = static_cast<int>(c.tp.size());
    MetricSet m;
    m.accuracy = c.total_pixels
                     ? static_cast<double>(c.correct_pixels) / c.total_pixels
                     : 0.0;
    m.per_class_iou.resize(classes);
    double iou_sum = 0.0;
    for (int k = 0; k < classes; ++k) {
        const long denom = c.tp[k] + c.fp[k] + c.fn[k];
        m.per_class_iou[k] = denom ? static_cast<double>(c.tp[k]) / denom : 1.0;
        iou_sum += m.per_class_iou[k];
    }
    m.mean_iou = classes ? iou_sum / classes : 0.0;

    long tp_fg = 0, fp_fg = 0, fn_fg = 0;
    for (int k = 1; k < classes; ++k) {
        tp_fg += c.tp[k];
        fp_fg += c.fp[k];
        fn_fg += c.fn[k];
    }
    const long dice_denom = 2 * tp_fg + fp_fg + fn_fg;
    m.dice_loss = dice_denom ? 1.0 - 2.0 * tp_fg / static_cast<double>(dice_denom) : 0.0;
    m.precision = (tp_fg + fp_fg) ? static_cast<double>(tp_fg) / (tp_fg + fp_fg) : 1.0;
    m.recall = (tp_fg + fn_fg) ? static_cast<double>(tp_fg) / (tp_fg + fn_fg) : 1.0;
    return m;
}

LabelMask predict(const nn::SplitParams<proto::real>& params,
                  const Tensor<proto::real>& x) {
    const Tensor<proto::real> probs = nn::forward_monolithic(params, x);
    const int c_n = static_cast<int>(probs.shape[0]);
    const int h = static_cast<int>(probs.shape[1]);
    const int w = static_cast<int>(probs.shape[2]);
    LabelMask pred(h, w, c_n, 0);
    const int hw = h * w;
    for (int u = 0; u < hw; ++u) {
        int best = 0;
        proto::real best_p = probs.v[u];
        for (int c = 1; c < c_n; ++c) {
            const proto::real p = probs.v[static_cast<size_t>(c) * hw + u];
            if (p > best_p) {
                best_p = p;
                best = c;
            }
        }
        pred.v[u] = static_cast<std::uint8_t>(best);
    }
    return pred;
}

MetricSet evaluate(const nn::SplitParams<proto::real>& params,
                   const std::vector<proto::TrainSample>& test_set) {
    const int classes = static_cast<int>(params.be[0].shape[0]);
    const int n = static_cast<int>(test_set.size());
    std::vector<LabelMask> preds(n);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(dynamic) if (sfcl::max_threads() > 1)
    for (int i = 0; i < n; ++i) preds[i] = predict(params, test_set[i].x);

    Confusion conf(classes);
    for (int i = 0; i < n; ++i) conf.add(preds[i], test_set[i].y);
    return metrics_from_confusion(conf);
}

}  // namespace sfcl::metrics
