#pragma once

#include "sfcl/core.hpp"

namespace sfcl::field {

// Signed Euclidean distance to the nearest opposite-membership pixel center,
// negative inside (mask true), positive outside. Exact: equals the brute
// force nearest-opposite-pixel scan. Throws DegenerateMask on all-true or
// all-false input.
ScalarField signed_distance(const BinaryMask& mask);

// Central-difference gradient magnitude with replicate padding, min-max
// normalized to [0,1] over the field (constant field -> zeros).
ScalarField gradient_magnitude(const ScalarField& f);

// |5-point Laplacian| with replicate padding, min-max normalized to [0,1].
ScalarField laplacian_magnitude(const ScalarField& f);

// |div(grad(phi)/|grad(phi)|)| * eq_radius, clipped to [0,1]. Pixels with
// |grad(phi)| < 1e-8 use a zero normal.
ScalarField curvature(const ScalarField& phi, double eq_radius);

// Separable Gaussian convolution, truncated at radius ceil(3*sigma), kernel
// renormalized to sum 1, replicate padding. Throws InvalidSigma for
// sigma <= 0.
ScalarField gaussian_smooth(const ScalarField& f, double sigma);

// True exactly where |phi| <= w.
BinaryMask boundary_band(const ScalarField& phi, double w);

}  // namespace sfcl::field
