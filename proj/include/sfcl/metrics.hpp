#pragma once

#include <vector>

#include "sfcl/core.hpp"
#include "sfcl/protocol.hpp"

namespace sfcl::metrics {

struct MetricSet {
    double accuracy = 0.0;
    double dice_loss = 0.0;  // micro-averaged over foreground classes
    double mean_iou = 0.0;   // mean of per-class IoU, background included
    std::vector<double> per_class_iou;
    double precision = 0.0;  // micro, foreground
    double recall = 0.0;     // micro, foreground
};

// One-vs-rest confusion counts per class, accumulated over a corpus.
struct Confusion {
    std::vector<long> tp, fp, fn;
    long total_pixels = 0;
    long correct_pixels = 0;

    explicit Confusion(int classes)
        : tp(classes, 0), fp(classes, 0), fn(classes, 0) {}
    void add(const LabelMask& pred, const LabelMask& truth);
};

MetricSet metrics_from_confusion(const Confusion& c);

// Hard argmax predictions of the network on one input.
LabelMask predict(const nn::SplitParams<proto::real>& params, const Tensor<proto::real>& x);

// Corpus-micro metrics of the given parameters on a test set. Pure.
MetricSet evaluate(const nn::SplitParams<proto::real>& params,
                   const std::vector<proto::TrainSample>& test_set);

}  // namespace sfcl::metrics
