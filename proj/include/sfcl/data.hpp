#pragma once

#include <cstdint>
#include <vector>

#include "sfcl/annsim.hpp"
#include "sfcl/core.hpp"

// Synthetic multiclass segmentation corpus: one anti-aliased ellipse per
// foreground class with distinct intensities, blurred boundaries and pixel
// noise (so all three difficulty cues vary), partitioned heterogeneously
// across clients with per-client corruption injected by the annotation-error
// simulator.

namespace sfcl::data {

struct SceneConfig {
    int height = 64;
    int width = 64;
    int classes = 3;  // background + classes-1 ellipses
    double min_axis = 8.0, max_axis = 16.0;  // semi-axes, pixels
    std::vector<double> intensities = {0.15, 0.55, 0.9};  // per class, bg first
    // radial shading: intensity fades by this fraction toward the rim, so
    // boundary strength varies along each contour and the inside/outside
    // edge evidence is asymmetric
    double shading = 0.3;
    double pixel_noise_std = 0.015;
    double blur_sigma_min = 0.4, blur_sigma_max = 0.9;
    double min_class_frac = 0.01;  // visible fraction required per class
    int margin = 2;

    void validate() const;
};

struct FederationLayout {
    std::vector<long> client_counts = {24, 36, 48, 12};
    std::vector<double> corruption_ratios = {0.2, 0.5, 0.8, 0.0};
    long test_count = 24;

    void validate() const;
};

struct Sample {
    std::uint32_t id = 0;
    ScalarField image;
    LabelMask label;
    bool corrupted = false;  // evaluation-only ground truth
};

struct Federation {
    std::vector<std::vector<Sample>> clients;
    std::vector<Sample> test;
};

// One scene. The label is the exact pre-blur rasterization; the image gets
// anti-aliased edges, Gaussian boundary blur and pixel noise. Deterministic
// per (config, seed). Throws PlacementError when no valid layout is found in
// 100 attempts.
std::pair<ScalarField, LabelMask> generate_scene(const SceneConfig& cfg,
                                                 std::uint64_t sample_seed);

// Disjoint per-client datasets plus a clean test set; a seeded subset of
// each client's labels is replaced by deform_multiclass output and flagged.
Federation build_federation(const SceneConfig& scene, const FederationLayout& layout,
                            const annsim::DifficultyParams& noise,
                            std::uint64_t master_seed);

}  // namespace sfcl::data
