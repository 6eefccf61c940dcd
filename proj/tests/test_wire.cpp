#include <doctest.h>

#include <cstring>
#include <random>

#include "sfcl/rng.hpp"
#include "sfcl/wire.hpp"

using namespace sfcl;

namespace {

template <typename T>
Tensor<T> random_tensor(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> rank_d(1, 4);
    std::uniform_int_distribution<int> dim_d(1, 6);
    std::normal_distribution<double> val(0.0, 100.0);
    const int rank = rank_d(rng);
    std::vector<std::uint32_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::uint32_t>(dim_d(rng));
    Tensor<T> t(shape);
    for (auto& v : t.v) v = static_cast<T>(val(rng));
    return t;
}

}  // namespace

TEST_SUITE_BEGIN("wire");

TEST_CASE("empty tensor round-trips") {
    Tensor<float> t({0});
    const auto bytes = wire::encode_tensor(t);
    const auto back = wire::expect_f32(wire::decode_tensor(bytes));
    CHECK(back.shape == t.shape);
    CHECK(back.v.empty());
}

TEST_CASE("random tensors round-trip bit-exact") {
    auto rng = make_rng(1234);
    for (int i = 0; i < 500; ++i) {
        const auto tf = random_tensor<float>(rng);
        CHECK(wire::expect_f32(wire::decode_tensor(wire::encode_tensor(tf))) == tf);
        const auto td = random_tensor<double>(rng);
        CHECK(wire::expect_f64(wire::decode_tensor(wire::encode_tensor(td))) == td);
    }
}

TEST_CASE("special values survive the round trip") {
    Tensor<double> t({4});
    t.v = {0.0, -0.0, 1e-308, 12345.6789};
    const auto back = wire::expect_f64(wire::decode_tensor(wire::encode_tensor(t)));
    for (size_t i = 0; i < t.v.size(); ++i)
        CHECK(std::memcmp(&back.v[i], &t.v[i], sizeof(double)) == 0);
}

TEST_CASE("corrupted CRC byte is detected") {
    auto rng = make_rng(5);
    auto bytes = wire::encode_tensor(random_tensor<float>(rng));
    bytes[bytes.size() - 2] ^= 0x40;
    CHECK_THROWS_AS(wire::decode_tensor(bytes), WireError);
}

TEST_CASE("any single-byte header or payload corruption is detected") {
    auto rng = make_rng(6);
    const auto t = random_tensor<double>(rng);
    const auto bytes = wire::encode_tensor(t);
    const std::size_t header_len = 7 + 4 * t.shape.size();
    for (std::size_t pos = 0; pos < bytes.size(); ++pos) {
        for (std::uint8_t x : {0x01, 0x80, 0xFF, 0x03}) {
            auto bad = bytes;
            bad[pos] ^= x;
            if (bad == bytes) continue;
            const bool in_header = pos < header_len;
            const bool in_crc = pos >= bytes.size() - 4;
            if (in_header || in_crc) {
                CHECK_THROWS_AS(wire::decode_tensor(bad), WireError);
            } else {
                CHECK_THROWS_AS(wire::decode_tensor(bad), WireError);  // payload -> CRC
            }
        }
    }
}

TEST_CASE("truncation and trailing bytes are detected") {
    auto rng = make_rng(7);
    const auto bytes = wire::encode_tensor(random_tensor<float>(rng));
    for (std::size_t keep : {std::size_t(0), std::size_t(3), std::size_t(6),
                             bytes.size() - 5, bytes.size() - 1}) {
        wire::Bytes cut(bytes.begin(), bytes.begin() + keep);
        CHECK_THROWS_AS(wire::decode_tensor(cut), WireError);
    }
    auto padded = bytes;
    padded.push_back(0);
    CHECK_THROWS_AS(wire::decode_tensor(padded), WireError);
}

TEST_CASE("dtype expectation mismatches throw") {
    Tensor<float> tf({2});
    tf.v = {1.0f, 2.0f};
    CHECK_THROWS_AS(wire::expect_f64(wire::decode_tensor(wire::encode_tensor(tf))),
                    WireError);
    Tensor<double> td({2});
    td.v = {1.0, 2.0};
    CHECK_THROWS_AS(wire::expect_f32(wire::decode_tensor(wire::encode_tensor(td))),
                    WireError);
}

TEST_CASE("concatenated tensors parse with a cursor") {
    auto rng = make_rng(8);
    const auto a = random_tensor<float>(rng);
    const auto b = random_tensor<double>(rng);
    auto msg = wire::encode_tensor(a);
    const auto eb = wire::encode_tensor(b);
    msg.insert(msg.end(), eb.begin(), eb.end());

    std::size_t used = 0;
    const auto first = wire::decode_tensor(msg.data(), msg.size(), &used);
    CHECK(wire::expect_f32(wire::AnyTensor(first)) == a);
    const auto second = wire::decode_tensor(msg.data() + used, msg.size() - used);
    CHECK(wire::expect_f64(wire::AnyTensor(second)) == b);
}

TEST_SUITE_END();
