#include "sfcl/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sfcl/kernels.hpp"

namespace sfcl::field {

namespace {

// Stand-in for +inf in the squared-distance transform. Large enough that a
// pseudo-site never beats a real one, small enough to keep the parabola
// intersection arithmetic finite.
constexpr double kFar = 1e20;

// 1D lower envelope of parabolas (Felzenszwalb & Huttenlocher). f holds
// squared distances, d receives the transformed row. Exact for integer f
// within double range.
void edt_1d(const std::vector<double>& f, int n, std::vector<double>& d,
            std::vector<int>& v, std::vector<double>& z) {
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            const int p = v[k];
            s = ((f[q] + static_cast<double>(q) * q) -
                 (f[p] + static_cast<double>(p) * p)) /
                (2.0 * (q - p));
            if (s <= z[k] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

// Squared Euclidean distance to the nearest site (sites = true pixels).
ScalarField squared_edt(const BinaryMask& sites) {
    const int h = sites.height, w = sites.width;
    ScalarField g(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) g.at(r, c) = sites.at(r, c) ? 0.0 : kFar;

    ScalarField tmp(h, w);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(static) if (sfcl::max_threads() > 1)
    for (int c = 0; c < w; ++c) {
        std::vector<double> f(h), d(h), z(h + 1);
        std::vector<int> v(h);
        for (int r = 0; r < h; ++r) f[r] = g.at(r, c);
        edt_1d(f, h, d, v, z);
        for (int r = 0; r < h; ++r) tmp.at(r, c) = d[r];
    }
    ScalarField out(h, w);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(static) if (sfcl::max_threads() > 1)
    for (int r = 0; r < h; ++r) {
        std::vector<double> f(w), d(w), z(w + 1);
        std::vector<int> v(w);
        for (int c = 0; c < w; ++c) f[c] = tmp.at(r, c);
        edt_1d(f, w, d, v, z);
        for (int c = 0; c < w; ++c) out.at(r, c) = d[c];
    }
    return out;
}

void minmax_normalize(ScalarField& f) {
    double lo = f.v[0], hi = f.v[0];
    for (double x : f.v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi > lo) {
        const double inv = 1.0 / (hi - lo);
        for (double& x : f.v) x = (x - lo) * inv;
    } else {
        std::fill(f.v.begin(), f.v.end(), 0.0);
    }
}

inline int cl(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

}  // namespace

ScalarField signed_distance(const BinaryMask& mask) {
    const long n_true = mask.count_true();
    if (n_true == 0 || n_true == static_cast<long>(mask.size()))
        throw DegenerateMask("signed_distance: mask is all-true or all-false");

    const ScalarField d_to_true = squared_edt(mask);
    const ScalarField d_to_false = squared_edt(mask.complement());
    ScalarField phi(mask.height, mask.width);
    for (size_t i = 0; i < phi.v.size(); ++i)
        phi.v[i] = mask.v[i] ? -std::sqrt(d_to_false.v[i]) : std::sqrt(d_to_true.v[i]);
    return phi;
}

ScalarField gradient_magnitude(const ScalarField& f) {
    const int h = f.height, w = f.width;
    ScalarField g(h, w);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(static) if (sfcl::max_threads() > 1)
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double gx = 0.5 * (f.at(r, cl(c + 1, w)) - f.at(r, cl(c - 1, w)));
            const double gy = 0.5 * (f.at(cl(r + 1, h), c) - f.at(cl(r - 1, h), c));
            g.at(r, c) = std::sqrt(gx * gx + gy * gy);
        }
    minmax_normalize(g);
    return g;
}

ScalarField laplacian_magnitude(const ScalarField& f) {
    const int h = f.height, w = f.width;
    ScalarField g(h, w);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(static) if (sfcl::max_threads() > 1)
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double lap = f.at(cl(r - 1, h), c) + f.at(cl(r + 1, h), c) +
                               f.at(r, cl(c - 1, w)) + f.at(r, cl(c + 1, w)) -
                               4.0 * f.at(r, c);
            g.at(r, c) = std::fabs(lap);
        }
    minmax_normalize(g);
    return g;
}

ScalarField curvature(const ScalarField& phi, double eq_radius) {
    const int h = phi.height, w = phi.width;
    ScalarField nx(h, w), ny(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double gx = 0.5 * (phi.at(r, cl(c + 1, w)) - phi.at(r, cl(c - 1, w)));
            const double gy = 0.5 * (phi.at(cl(r + 1, h), c) - phi.at(cl(r - 1, h), c));
            const double norm = std::sqrt(gx * gx + gy * gy);
            if (norm < 1e-8) {
                nx.at(r, c) = 0.0;
                ny.at(r, c) = 0.0;
            } else {
                nx.at(r, c) = gx / norm;
                ny.at(r, c) = gy / norm;
            }
        }
    ScalarField kappa(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double div = 0.5 * (nx.at(r, cl(c + 1, w)) - nx.at(r, cl(c - 1, w))) +
                               0.5 * (ny.at(cl(r + 1, h), c) - ny.at(cl(r - 1, h), c));
            kappa.at(r, c) = std::clamp(std::fabs(div) * eq_radius, 0.0, 1.0);
        }
    return kappa;
}

ScalarField gaussian_smooth(const ScalarField& f, double sigma) {
    if (!(sigma > 0.0)) throw InvalidSigma("gaussian_smooth: sigma must be > 0");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        taps[t + radius] = std::exp(-0.5 * (t * t) / (sigma * sigma));
        sum += taps[t + radius];
    }
    for (double& k : taps) k /= sum;
    return kern::separable_blur(f, taps, radius);
}

BinaryMask boundary_band(const ScalarField& phi, double w) {
    BinaryMask band(phi.height, phi.width);
    for (size_t i = 0; i < phi.v.size(); ++i)
        band.v[i] = (std::fabs(phi.v[i]) <= w) ? 1 : 0;
    return band;
}

}  // namespace sfcl::field
