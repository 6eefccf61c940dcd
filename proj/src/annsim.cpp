#include "sfcl/annsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sfcl/field.hpp"

namespace sfcl::annsim {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Bilinear sample with replicate clamping; (y, x) in pixel coordinates.
double sample_bilinear(const ScalarField& f, double y, double x) {
    const int h = f.height, w = f.width;
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const int y1 = std::min(y0 + 1, h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const double fy = y - y0, fx = x - x0;
    return (1.0 - fy) * ((1.0 - fx) * f.at(y0, x0) + fx * f.at(y0, x1)) +
           fy * ((1.0 - fx) * f.at(y1, x0) + fx * f.at(y1, x1));
}

ScalarField masked(const ScalarField& f, const BinaryMask& band) {
    ScalarField out(f.height, f.width);
    for (size_t i = 0; i < f.v.size(); ++i) out.v[i] = band.v[i] ? f.v[i] : 0.0;
    return out;
}

}  // namespace

void DifficultyParams::validate() const {
    if (!(rho > 0.0)) throw Error("DifficultyParams: rho must be > 0");
    if (a_min < 0.0) throw Error("DifficultyParams: a_min must be >= 0");
    if (!(epsilon > 0.0)) throw Error("DifficultyParams: epsilon must be > 0");
    if (!(band_coeff > 0.0)) throw Error("DifficultyParams: band_coeff must be > 0");
}

double DifficultyParams::effective_delta(double w) const {
    if (delta > 0.0) return delta;
    return std::max(1.0, w / 4.0);
}

double band_width(const BinaryMask& mask, double band_coeff) {
    const long area = mask.count_true();
    if (area == 0 || area == static_cast<long>(mask.size()))
        throw DegenerateMask("band_width: mask is all-true or all-false");
    return band_coeff * std::sqrt(static_cast<double>(area) / kPi);
}

ScalarField edge_cue(const ScalarField& image, const BinaryMask& band) {
    const ScalarField g = field::gradient_magnitude(image);
    ScalarField cue(image.height, image.width);
    for (size_t i = 0; i < cue.v.size(); ++i)
        cue.v[i] = band.v[i] ? (1.0 - g.v[i]) : 0.0;
    return cue;
}

ScalarField blur_cue(const ScalarField& image, const BinaryMask& band) {
    const ScalarField lap = field::laplacian_magnitude(image);
    ScalarField cue(image.height, image.width);
    for (size_t i = 0; i < cue.v.size(); ++i)
        cue.v[i] = band.v[i] ? (1.0 - lap.v[i]) : 0.0;
    return cue;
}

ScalarField curvature_cue(const ScalarField& phi, const BinaryMask& band,
                          double eq_radius) {
    const ScalarField kappa = field::curvature(phi, eq_radius);
    return masked(kappa, band);
}

DifficultyMap difficulty_map(const ScalarField& image, const BinaryMask& mask,
                             const DifficultyParams& params) {
    params.validate();
    const double w = band_width(mask, params.band_coeff);
    const double eq_radius = w / params.band_coeff;
    const ScalarField phi = field::signed_distance(mask);
    const BinaryMask band = field::boundary_band(phi, w);

    const ScalarField d_edge = edge_cue(image, band);
    const ScalarField d_blur = blur_cue(image, band);
    const ScalarField d_curv = curvature_cue(phi, band, eq_radius);

    DifficultyMap map;
    map.D = ScalarField(image.height, image.width);
    for (size_t i = 0; i < map.D.v.size(); ++i)
        map.D.v[i] = (d_edge.v[i] + d_blur.v[i] + d_curv.v[i]) / 3.0;
    map.band = band;
    map.w = w;
    return map;
}

ScalarField amplitude(const DifficultyMap& map, const DifficultyParams& params) {
    const double a_max = map.w * params.amax_scale;
    ScalarField a(map.D.height, map.D.width);
    for (size_t i = 0; i < a.v.size(); ++i) {
        if (!map.band.v[i]) continue;
        a.v[i] = params.a_min +
                 (a_max - params.a_min) * std::pow(map.D.v[i], params.rho);
    }
    return a;
}

ScalarField direction(const ScalarField& image, const ScalarField& phi,
                      const BinaryMask& band, double delta, double epsilon) {
    const ScalarField g = field::gradient_magnitude(image);
    const int h = phi.height, w = phi.width;
    ScalarField b(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            if (!band.at(r, c)) continue;
            const int cp = std::min(c + 1, w - 1), cm = std::max(c - 1, 0);
            const int rp = std::min(r + 1, h - 1), rm = std::max(r - 1, 0);
            const double gx = 0.5 * (phi.at(r, cp) - phi.at(r, cm));
            const double gy = 0.5 * (phi.at(rp, c) - phi.at(rm, c));
            const double norm = std::sqrt(gx * gx + gy * gy);
            if (norm < 1e-8) continue;  // zero normal -> b = 0
            const double nx = gx / norm, ny = gy / norm;
            const double g_out = sample_bilinear(g, r + delta * ny, c + delta * nx);
            const double g_in = sample_bilinear(g, r - delta * ny, c - delta * nx);
            b.at(r, c) = std::clamp((g_in - g_out) / (g_in + g_out + epsilon), -1.0, 1.0);
        }
    return b;
}

std::pair<BinaryMask, DeformationRecord> deform_class(const ScalarField& image,
                                                      const BinaryMask& mask,
                                                      const DifficultyParams& params) {
    const DifficultyMap map = difficulty_map(image, mask, params);
    const ScalarField phi = field::signed_distance(mask);

    DeformationRecord rec;
    rec.A = amplitude(map, params);
    rec.b = direction(image, phi, map.band, params.effective_delta(map.w),
                      params.epsilon);
    rec.phi_before = phi;

    ScalarField displacement(phi.height, phi.width);
    for (size_t i = 0; i < displacement.v.size(); ++i)
        displacement.v[i] = rec.A.v[i] * rec.b.v[i];
    const double sigma = map.w;
    displacement = field::gaussian_smooth(displacement, sigma);

    rec.phi_after = phi;
    for (size_t i = 0; i < rec.phi_after.v.size(); ++i)
        rec.phi_after.v[i] += displacement.v[i];

    BinaryMask noisy(mask.height, mask.width);
    for (size_t i = 0; i < noisy.v.size(); ++i)
        noisy.v[i] = (rec.phi_after.v[i] <= 0.0) ? 1 : 0;

    rec.changed_pixels = 0;
    for (size_t i = 0; i < noisy.v.size(); ++i)
        rec.changed_pixels += (noisy.v[i] != mask.v[i]);
    return {noisy, rec};
}

LabelMask deform_multiclass(const ScalarField& image, const LabelMask& label,
                            const DifficultyParams& params,
                            const std::set<int>& class_subset) {
    params.validate();

    std::vector<int> present;
    {
        std::vector<char> seen(256, 0);
        for (auto k : label.v) seen[k] = 1;
        for (int k = 1; k < 256; ++k)
            if (seen[k]) present.push_back(k);
    }
    for (int k : class_subset) {
        if (std::find(present.begin(), present.end(), k) == present.end())
            throw MissingClass("deform_multiclass: class " + std::to_string(k) +
                               " absent from label");
    }

    // Per-class (possibly deformed) SDFs; classes outside the subset keep
    // their clean SDF so the argmin reduces to the original assignment.
    std::vector<ScalarField> phis(present.size());
    for (size_t i = 0; i < present.size(); ++i) {
        const int k = present[i];
        const BinaryMask mask = label.class_mask(k);
        if (class_subset.count(k)) {
            phis[i] = deform_class(image, mask, params).second.phi_after;
        } else {
            phis[i] = field::signed_distance(mask);
        }
    }

    LabelMask out(label.height, label.width, label.num_classes, 0);
    for (size_t u = 0; u < out.v.size(); ++u) {
        int best = 0;
        double best_phi = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < present.size(); ++i) {
            const double p = phis[i].v[u];
            if (p <= 0.0 && p < best_phi) {
                best_phi = p;
                best = present[i];
            }
        }
        out.v[u] = static_cast<std::uint8_t>(best);
    }
    return out;
}

}  // namespace sfcl::annsim
