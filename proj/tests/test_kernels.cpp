#include <doctest.h>

#include <random>

#include "sfcl/kernels.hpp"
#include "sfcl/rng.hpp"

using namespace sfcl;

namespace {

template <typename T>
Tensor<T> random_tensor(std::vector<std::uint32_t> shape, std::uint64_t seed) {
    Tensor<T> t(std::move(shape));
    auto rng = make_rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& v : t.v) v = static_cast<T>(n(rng));
    return t;
}

}  // namespace

TEST_SUITE_BEGIN("kernels");

TEST_CASE("omp kernels match the serial reference bit for bit") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto in = random_tensor<float>({5, 19, 23}, seed);
        const auto w = random_tensor<float>({7, 5, 3, 3}, seed + 100);
        const auto b = random_tensor<float>({7}, seed + 200);
        const auto gout = random_tensor<float>({7, 19, 23}, seed + 300);

        CHECK(kern::conv3x3_forward(in, w, b) == kern::ref::conv3x3_forward(in, w, b));

        Tensor<float> dw1({7, 5, 3, 3}), db1({7}), dw2({7, 5, 3, 3}), db2({7});
        kern::ref::conv3x3_backward_weights(in, gout, dw1, db1);
        kern::conv3x3_backward_weights(in, gout, dw2, db2);
        CHECK(dw1 == dw2);
        CHECK(db1 == db2);

        CHECK(kern::conv3x3_backward_input(w, gout, in.shape) ==
              kern::ref::conv3x3_backward_input(w, gout, in.shape));

        CHECK(kern::softmax_channels(gout) == kern::ref::softmax_channels(gout));
    }
}

TEST_CASE("kernels are invariant to the thread budget") {
    const auto in = random_tensor<float>({4, 17, 31}, 9);
    const auto w = random_tensor<float>({6, 4, 3, 3}, 10);
    const auto b = random_tensor<float>({6}, 11);
    const auto base = kern::conv3x3_forward(in, w, b);
    const int saved = max_threads();
    for (int threads : {1, 2, 4}) {
        set_max_threads(threads);
        CHECK(kern::conv3x3_forward(in, w, b) == base);
    }
    set_max_threads(saved);
}

TEST_CASE("conv3x3 forward: hand-computed 1x1 and identity kernel") {
    // single pixel: replicate padding makes all taps read the same value
    Tensor<float> in({1, 1, 1});
    in.v = {2.0f};
    Tensor<float> w({1, 1, 3, 3});
    for (auto& v : w.v) v = 1.0f;
    Tensor<float> b({1});
    b.v = {0.5f};
    auto out = kern::conv3x3_forward(in, w, b);
    CHECK(out.v[0] == doctest::Approx(0.5f + 9.0f * 2.0f));

    // identity kernel reproduces the input
    Tensor<float> in2 = random_tensor<float>({1, 6, 7}, 13);
    Tensor<float> w2({1, 1, 3, 3});
    w2.v[4] = 1.0f;  // center tap
    Tensor<float> b2({1});
    auto out2 = kern::conv3x3_forward(in2, w2, b2);
    for (size_t i = 0; i < in2.v.size(); ++i) CHECK(out2.v[i] == in2.v[i]);
}

TEST_CASE("softmax rows sum to 1") {
    const auto logits = random_tensor<double>({5, 9, 11}, 17);
    const auto probs = kern::softmax_channels(logits);
    const int hw = 9 * 11;
    for (int u = 0; u < hw; ++u) {
        double s = 0.0;
        for (int c = 0; c < 5; ++c) s += probs.v[static_cast<size_t>(c) * hw + u];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_SUITE_END();
