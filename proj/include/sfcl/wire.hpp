#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "sfcl/core.hpp"

// Binary tensor wire format, version 1:
//
//   "SFCL" | version u8 = 1 | dtype u8 (1 = f32, 2 = f64) | rank u8 |
//   rank x dim u32le | payload (row-major little-endian IEEE-754) |
//   crc32 u32le of the payload bytes
//
// decode(encode(x)) is bit-exact. Bad magic, version, dtype, size or CRC
// raises WireError.

namespace sfcl::wire {

constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::uint8_t kDtypeF64 = 2;

using Bytes = std::vector<std::uint8_t>;
using AnyTensor = std::variant<Tensor<float>, Tensor<double>>;

Bytes encode_tensor(const Tensor<float>& t);
Bytes encode_tensor(const Tensor<double>& t);

// Parses one tensor starting at data. When consumed is null the whole buffer
// must be exactly one tensor; otherwise *consumed receives the bytes read so
// callers can walk a concatenated stream.
AnyTensor decode_tensor(const std::uint8_t* data, std::size_t size,
                        std::size_t* consumed = nullptr);

inline AnyTensor decode_tensor(const Bytes& b) { return decode_tensor(b.data(), b.size()); }

// Typed helpers for streams with a known layout; throw WireError on a dtype
// mismatch.
Tensor<float> expect_f32(AnyTensor&& t);
Tensor<double> expect_f64(AnyTensor&& t);

}  // namespace sfcl::wire
