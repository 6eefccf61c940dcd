#pragma once

#include <set>
#include <utility>

#include "sfcl/core.hpp"

namespace sfcl::annsim {

// Knobs of the difficulty-guided deformation. a_max and the smoothing sigma
// both follow the band width w; amax_scale multiplies that policy value.
// delta = 0 means the auto policy max(1, w/4).
struct DifficultyParams {
    double rho = 2.0;
    double a_min = 0.0;
    double amax_scale = 1.0;
    double delta = 0.0;
    double epsilon = 1e-6;
    double band_coeff = 0.2;

    void validate() const;
    double effective_delta(double w) const;
};

struct DifficultyMap {
    ScalarField D;    // in [0,1], zero off band
    BinaryMask band;  // |phi| <= w
    double w = 0.0;   // band width, pixels
    int class_id = 0;
};

struct DeformationRecord {
    ScalarField A;           // deformation amplitude, pixels, zero off band
    ScalarField b;           // signed direction in [-1,1]
    ScalarField phi_before;  // SDF of the clean mask
    ScalarField phi_after;   // deformed SDF
    long changed_pixels = 0;
};

// w = band_coeff * sqrt(A_obj / pi). Throws DegenerateMask.
double band_width(const BinaryMask& mask, double band_coeff = 0.2);

// (1 - g(u)) * B(u), g = normalized gradient magnitude of the image.
ScalarField edge_cue(const ScalarField& image, const BinaryMask& band);

// (1 - |laplacian|(u)) * B(u).
ScalarField blur_cue(const ScalarField& image, const BinaryMask& band);

// |kappa(u)| * B(u), kappa normalized by the equivalent radius.
ScalarField curvature_cue(const ScalarField& phi, const BinaryMask& band,
                          double eq_radius);

// Mean of the three cues, zero off band.
DifficultyMap difficulty_map(const ScalarField& image, const BinaryMask& mask,
                             const DifficultyParams& params);

// A(u) = (a_min + (a_max - a_min) * D(u)^rho) * B(u), a_max = w * amax_scale.
ScalarField amplitude(const DifficultyMap& map, const DifficultyParams& params);

// b(u) = clip((g_in - g_out) / (g_in + g_out + eps), -1, 1) on the band,
// sampling g at u -/+ delta * n(u) by bilinear interpolation; zero off band
// and where the SDF gradient vanishes.
ScalarField direction(const ScalarField& image, const ScalarField& phi,
                      const BinaryMask& band, double delta, double epsilon);

// Full single-class pipeline: phi' = phi + G_sigma * (A .* b), sigma = w,
// noisy mask = (phi' <= 0). Positive b raises phi near the contour and
// shrinks the object.
std::pair<BinaryMask, DeformationRecord> deform_class(const ScalarField& image,
                                                      const BinaryMask& mask,
                                                      const DifficultyParams& params);

// Deform every foreground class in class_subset with its own difficulty map;
// reassign pixels by argmin of the (deformed) SDFs among those <= 0, ties to
// the lowest class id, background where none qualifies. Throws MissingClass
// if a subset class is absent from the label.
LabelMask deform_multiclass(const ScalarField& image, const LabelMask& label,
                            const DifficultyParams& params,
                            const std::set<int>& class_subset);

}  // namespace sfcl::annsim
