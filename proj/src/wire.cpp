#include "sfcl/wire.hpp"

#include <cstring>
#include <zlib.h>

namespace sfcl::wire {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'C', 'L'};

void put_u32le(Bytes& b, std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v & 0xFF));
    b.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    b.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    b.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

std::uint32_t get_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t payload_crc(const std::uint8_t* p, std::size_t n) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(p), static_cast<uInt>(n)));
}

// Little-endian host assumed for the raw memcpy of IEEE-754 payloads; the
// simulator only talks to itself, and the test suite round-trips every value
// so a big-endian port would fail loudly.
template <typename T>
Bytes encode_impl(const Tensor<T>& t, std::uint8_t dtype) {
    Bytes b;
    b.reserve(11 + 4 * t.shape.size() + sizeof(T) * t.v.size() + 4);
    b.insert(b.end(), kMagic, kMagic + 4);
    b.push_back(kVersion);
    b.push_back(dtype);
    b.push_back(static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) put_u32le(b, d);
    const std::size_t payload_off = b.size();
    b.resize(b.size() + sizeof(T) * t.v.size());
    if (!t.v.empty()) std::memcpy(b.data() + payload_off, t.v.data(), sizeof(T) * t.v.size());
    const std::uint32_t crc = payload_crc(b.data() + payload_off, sizeof(T) * t.v.size());
    put_u32le(b, crc);
    return b;
}

template <typename T>
Tensor<T> decode_payload(const std::uint8_t* p, std::size_t count,
                         std::vector<std::uint32_t> shape) {
    Tensor<T> t;
    t.shape = std::move(shape);
    t.v.resize(count);
    if (count) std::memcpy(t.v.data(), p, count * sizeof(T));
    return t;
}

}  // namespace

Bytes encode_tensor(const Tensor<float>& t) { return encode_impl(t, kDtypeF32); }
Bytes encode_tensor(const Tensor<double>& t) { return encode_impl(t, kDtypeF64); }

AnyTensor decode_tensor(const std::uint8_t* data, std::size_t size,
                        std::size_t* consumed) {
    if (size < 7) throw WireError("wire: truncated header");
    if (std::memcmp(data, kMagic, 4) != 0) throw WireError("wire: bad magic");
    if (data[4] != kVersion) throw WireError("wire: unsupported version");
    const std::uint8_t dtype = data[5];
    if (dtype != kDtypeF32 && dtype != kDtypeF64) throw WireError("wire: bad dtype");
    const std::size_t rank = data[6];
    std::size_t off = 7;
    if (size < off + 4 * rank) throw WireError("wire: truncated dims");
    std::vector<std::uint32_t> shape(rank);
    std::size_t count = rank ? 1 : 0;
    for (std::size_t i = 0; i < rank; ++i) {
        shape[i] = get_u32le(data + off);
        off += 4;
        count *= shape[i];
    }
    const std::size_t elem = dtype == kDtypeF32 ? 4 : 8;
    const std::size_t need = off + elem * count + 4;
    if (size < need) throw WireError("wire: truncated payload");
    if (!consumed && size != need) throw WireError("wire: trailing bytes");
    const std::uint32_t crc_stored = get_u32le(data + off + elem * count);
    if (payload_crc(data + off, elem * count) != crc_stored)
        throw WireError("wire: payload CRC mismatch");
    if (consumed) *consumed = need;
    if (dtype == kDtypeF32)
        return decode_payload<float>(data + off, count, std::move(shape));
    return decode_payload<double>(data + off, count, std::move(shape));
}

Tensor<float> expect_f32(AnyTensor&& t) {
    if (auto* p = std::get_if<Tensor<float>>(&t)) return std::move(*p);
    throw WireError("wire: expected f32 tensor");
}

Tensor<double> expect_f64(AnyTensor&& t) {
    if (auto* p = std::get_if<Tensor<double>>(&t)) return std::move(*p);
    throw WireError("wire: expected f64 tensor");
}

}  // namespace sfcl::wire
