#include <doctest.h>

#include "sfcl/metrics.hpp"
#include "sfcl/rng.hpp"

using namespace sfcl;
using proto::real;

namespace {

proto::TrainSample threshold_sample(std::uint32_t id, int n, std::uint64_t seed) {
    proto::TrainSample t;
    t.id = id;
    t.x = Tensor<real>({1, static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n)});
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : t.x.v) v = static_cast<real>(u(rng));
    t.y = LabelMask(n, n, 3, 0);
    for (size_t i = 0; i < t.y.v.size(); ++i)
        t.y.v[i] = t.x.v[i] > 0.7 ? 2 : (t.x.v[i] > 0.4 ? 1 : 0);
    return t;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("perfect predictions give perfect scores") {
    metrics::Confusion conf(3);
    LabelMask y(8, 8, 3, 0);
    for (size_t i = 0; i < y.v.size(); ++i) y.v[i] = static_cast<std::uint8_t>(i % 3);
    conf.add(y, y);
    const auto m = metrics::metrics_from_confusion(conf);
    CHECK(m.accuracy == 1.0);
    CHECK(m.dice_loss == 0.0);
    CHECK(m.mean_iou == 1.0);
    for (double iou : m.per_class_iou) CHECK(iou == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
}

TEST_CASE("complement predictions on a balanced binary task give zero accuracy") {
    LabelMask y(4, 4, 2, 0);
    LabelMask pred(4, 4, 2, 0);
    for (size_t i = 0; i < y.v.size(); ++i) {
        y.v[i] = i % 2;
        pred.v[i] = 1 - (i % 2);
    }
    metrics::Confusion conf(2);
    conf.add(pred, y);
    const auto m = metrics::metrics_from_confusion(conf);
    CHECK(m.accuracy == 0.0);
    CHECK(m.dice_loss == 1.0);
}

TEST_CASE("hand-built confusion matches the formulas") {
    // binary task: TP=3, FP=2, FN=1, TN=4 for class 1
    metrics::Confusion conf(2);
    LabelMask truth(1, 10, 2, 0), pred(1, 10, 2, 0);
    // 3 true positives
    truth.v = {1, 1, 1, 0, 0, 1, 0, 0, 0, 0};
    pred.v  = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    conf.add(pred, truth);
    const auto m = metrics::metrics_from_confusion(conf);
    const double tp = 3, fp = 2, fn = 1, tn = 4;
    CHECK(m.accuracy == doctest::Approx((tp + tn) / 10.0).epsilon(1e-12));
    CHECK(m.dice_loss == doctest::Approx(1.0 - 2 * tp / (2 * tp + fp + fn)).epsilon(1e-12));
    CHECK(m.per_class_iou[1] == doctest::Approx(tp / (tp + fp + fn)).epsilon(1e-12));
    CHECK(m.precision == doctest::Approx(tp / (tp + fp)).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(tp / (tp + fn)).epsilon(1e-12));
    CHECK(m.mean_iou ==
          doctest::Approx((m.per_class_iou[0] + m.per_class_iou[1]) / 2.0).epsilon(1e-9));
}

TEST_CASE("evaluate is pure and mean_iou is the mean of per-class IoU") {
    nn::NetConfig cfg{1, 3, 4, 6};
    const auto params = nn::init_params<real>(cfg, 3);
    std::vector<proto::TrainSample> test;
    for (std::uint32_t i = 0; i < 4; ++i) test.push_back(threshold_sample(i, 12, 50 + i));
    const auto a = metrics::evaluate(params, test);
    const auto b = metrics::evaluate(params, test);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.dice_loss == b.dice_loss);
    CHECK(a.per_class_iou == b.per_class_iou);
    double mean = 0.0;
    for (double iou : a.per_class_iou) mean += iou;
    mean /= a.per_class_iou.size();
    CHECK(a.mean_iou == doctest::Approx(mean).epsilon(1e-9));
    for (double iou : a.per_class_iou) {
        CHECK(iou >= 0.0);
        CHECK(iou <= 1.0);
    }
}

TEST_SUITE_END();
