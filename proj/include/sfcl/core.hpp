#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfcl {

// Error hierarchy. Callers catch the concrete type; everything derives from
// Error so the CLI can map any library failure to a runtime-error exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateMask : Error { using Error::Error; };
struct InvalidSigma   : Error { using Error::Error; };
struct MissingClass   : Error { using Error::Error; };
struct ShapeError     : Error { using Error::Error; };
struct CacheError     : Error { using Error::Error; };
struct WireError      : Error { using Error::Error; };
struct EmptyBatch     : Error { using Error::Error; };
struct PlacementError : Error { using Error::Error; };
struct ConfigError    : Error { using Error::Error; };
struct MissingRun     : Error { using Error::Error; };

// Dense 2D grid of doubles, row-major.
struct ScalarField {
    int height = 0;
    int width = 0;
    std::vector<double> v;

    ScalarField() = default;
    ScalarField(int h, int w, double fill = 0.0)
        : height(h), width(w), v(static_cast<size_t>(h) * w, fill) {}

    double& at(int r, int c) { return v[static_cast<size_t>(r) * width + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * width + c]; }
    size_t size() const { return v.size(); }
    bool same_shape(const ScalarField& o) const {
        return height == o.height && width == o.width;
    }
};

// Dense 2D boolean grid, row-major, one byte per pixel.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> v;

    BinaryMask() = default;
    BinaryMask(int h, int w, bool fill = false)
        : height(h), width(w), v(static_cast<size_t>(h) * w, fill ? 1 : 0) {}

    bool at(int r, int c) const { return v[static_cast<size_t>(r) * width + c] != 0; }
    void set(int r, int c, bool b) { v[static_cast<size_t>(r) * width + c] = b ? 1 : 0; }
    size_t size() const { return v.size(); }

    long count_true() const {
        long n = 0;
        for (auto b : v) n += (b != 0);
        return n;
    }
    BinaryMask complement() const {
        BinaryMask m(height, width);
        for (size_t i = 0; i < v.size(); ++i) m.v[i] = v[i] ? 0 : 1;
        return m;
    }
    bool operator==(const BinaryMask& o) const {
        return height == o.height && width == o.width && v == o.v;
    }
};

// Dense 2D grid of class indices. Class 0 is background by convention.
struct LabelMask {
    int height = 0;
    int width = 0;
    int num_classes = 0;
    std::vector<std::uint8_t> v;

    LabelMask() = default;
    LabelMask(int h, int w, int classes, std::uint8_t fill = 0)
        : height(h), width(w), num_classes(classes),
          v(static_cast<size_t>(h) * w, fill) {}

    std::uint8_t at(int r, int c) const { return v[static_cast<size_t>(r) * width + c]; }
    void set(int r, int c, std::uint8_t k) { v[static_cast<size_t>(r) * width + c] = k; }
    size_t size() const { return v.size(); }

    // Binary mask of one class.
    BinaryMask class_mask(int k) const {
        BinaryMask m(height, width);
        for (size_t i = 0; i < v.size(); ++i) m.v[i] = (v[i] == k) ? 1 : 0;
        return m;
    }
    bool operator==(const LabelMask& o) const {
        return height == o.height && width == o.width && v == o.v;
    }
};

// Small dense tensor, row-major, shape recorded as 32-bit dims (wire format
// carries dims as u32le). Rank up to 4 in practice.
template <typename T>
struct Tensor {
    std::vector<std::uint32_t> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<std::uint32_t> s) : shape(std::move(s)) {
        v.assign(count(shape), T(0));
    }

    static size_t count(const std::vector<std::uint32_t>& s) {
        size_t n = 1;
        for (auto d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    size_t size() const { return v.size(); }

    // rank-3 (c, h, w)
    T& at3(int c, int y, int x) {
        return v[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    T at3(int c, int y, int x) const {
        return v[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    // rank-4 (a, b, c, d)
    T& at4(int a, int b, int c, int d) {
        return v[((static_cast<size_t>(a) * shape[1] + b) * shape[2] + c) * shape[3] + d];
    }
    T at4(int a, int b, int c, int d) const {
        return v[((static_cast<size_t>(a) * shape[1] + b) * shape[2] + c) * shape[3] + d];
    }

    bool operator==(const Tensor& o) const { return shape == o.shape && v == o.v; }
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

// Thread-count control for the OpenMP kernels. 1 forces the serial path;
// 0 restores the OpenMP default. All kernels are bit-deterministic for any
// thread count (outputs are element-independent; reductions keep a fixed
// order), so this only affects speed.
int max_threads();
void set_max_threads(int n);

}  // namespace sfcl
