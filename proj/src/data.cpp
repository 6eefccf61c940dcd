#include "sfcl/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sfcl/field.hpp"
#include "sfcl/rng.hpp"

namespace sfcl::data {

namespace {

struct Ellipse {
    double cy, cx;    // center
    double ay, ax;    // semi-axes
    double theta;     // rotation
    // squared normalized elliptical radius (<= 1 inside)
    double radius2(double y, double x) const {
        const double dy = y - cy, dx = x - cx;
        const double c = std::cos(theta), s = std::sin(theta);
        const double u = c * dx + s * dy;
        const double v = -s * dx + c * dy;
        return (u * u) / (ax * ax) + (v * v) / (ay * ay);
    }
    bool contains(double y, double x) const { return radius2(y, x) <= 1.0; }
    // 4x4 supersampled coverage of one pixel.
    double coverage(int y, int x) const {
        int inside = 0;
        for (int sy = 0; sy < 4; ++sy)
            for (int sx = 0; sx < 4; ++sx)
                inside += contains(y - 0.375 + sy * 0.25, x - 0.375 + sx * 0.25);
        return inside / 16.0;
    }
};

}  // namespace

void SceneConfig::validate() const {
    if (height < 8 || width < 8) throw ConfigError("scene: image too small");
    if (classes < 2) throw ConfigError("scene: need at least 2 classes");
    if (min_axis < 3.0) throw ConfigError("scene: ellipse axes must be >= 3 px");
    if (max_axis < min_axis) throw ConfigError("scene: max_axis < min_axis");
    if (shading < 0.0 || shading >= 1.0)
        throw ConfigError("scene: shading must be in [0, 1)");
    if (static_cast<int>(intensities.size()) != classes)
        throw ConfigError("scene: need one intensity per class");
    if (2.0 * (max_axis + margin) >= std::min(height, width))
        throw ConfigError("scene: ellipses cannot fit inside the frame");
}

void FederationLayout::validate() const {
    if (client_counts.empty()) throw ConfigError("layout: no clients");
    if (client_counts.size() != corruption_ratios.size())
        throw ConfigError("layout: counts and ratios length mismatch");
    for (long c : client_counts)
        if (c < 1) throw ConfigError("layout: client counts must be >= 1");
    for (double r : corruption_ratios)
        if (r < 0.0 || r > 1.0) throw ConfigError("layout: ratios must be in [0,1]");
    if (test_count < 1) throw ConfigError("layout: test_count must be >= 1");
}

std::pair<ScalarField, LabelMask> generate_scene(const SceneConfig& cfg,
                                                 std::uint64_t sample_seed) {
    cfg.validate();
    auto rng = make_rng(sample_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const int h = cfg.height, w = cfg.width;
    const long total_px = static_cast<long>(h) * w;
    const long min_px = static_cast<long>(cfg.min_class_frac * total_px);

    LabelMask label(h, w, cfg.classes, 0);
    std::vector<Ellipse> shapes;
    // Per-ellipse appearance: either the interior fades toward the rim
    // (stronger edge evidence inside) or a halo brightens the background just
    // outside it (stronger evidence outside). Randomizing the mode keeps the
    // annotation-noise direction heterogeneous across samples.
    std::vector<double> shade, halo;

    for (int k = 1; k < cfg.classes; ++k) {
        const double strength = (0.7 + 0.3 * unit(rng)) * cfg.shading;
        const bool inner = unit(rng) < 0.5;
        shade.push_back(inner ? strength : 0.0);
        halo.push_back(inner ? 0.0 : strength);
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            Ellipse e;
            e.ay = cfg.min_axis + (cfg.max_axis - cfg.min_axis) * unit(rng);
            e.ax = cfg.min_axis + (cfg.max_axis - cfg.min_axis) * unit(rng);
            const double bound = std::max(e.ay, e.ax) + cfg.margin;
            e.cy = bound + (h - 1 - 2.0 * bound) * unit(rng);
            e.cx = bound + (w - 1 - 2.0 * bound) * unit(rng);
            e.theta = 2.0 * 3.14159265358979323846 * unit(rng);

            LabelMask candidate = label;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (e.contains(y, x)) candidate.set(y, x, static_cast<std::uint8_t>(k));

            // every class painted so far must stay visible
            bool ok = true;
            for (int kk = 1; kk <= k; ++kk) {
                long count = 0;
                for (auto v : candidate.v) count += (v == kk);
                if (count < min_px) { ok = false; break; }
            }
            if (ok) {
                label = std::move(candidate);
                shapes.push_back(e);
                placed = true;
            }
        }
        if (!placed)
            throw PlacementError("generate_scene: no valid placement for class " +
                                 std::to_string(k) + " after 100 attempts");
    }

    // Anti-aliased image: halos first (background structure), then ellipse
    // bodies with supersampled coverage in class order (matching the label
    // paint order).
    ScalarField img(h, w, cfg.intensities[0]);
    for (size_t i = 0; i < shapes.size(); ++i) {
        if (halo[i] <= 0.0) continue;
        const double intensity = cfg.intensities[i + 1];
        const double r_geo = std::sqrt(shapes[i].ax * shapes[i].ay);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double rho = std::sqrt(shapes[i].radius2(y, x));
                if (rho <= 1.0) continue;
                const double fade = 1.0 - (rho - 1.0) * r_geo / 4.0;
                if (fade > 0.0) img.at(y, x) += halo[i] * intensity * fade;
            }
    }
    for (size_t i = 0; i < shapes.size(); ++i) {
        const double intensity = cfg.intensities[i + 1];
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double cov = shapes[i].coverage(y, x);
                if (cov > 0.0) {
                    const double rho2 = std::min(shapes[i].radius2(y, x), 1.0);
                    const double shaded = intensity * (1.0 - shade[i] * rho2);
                    img.at(y, x) = (1.0 - cov) * img.at(y, x) + cov * shaded;
                }
            }
    }

    const double blur =
        cfg.blur_sigma_min + (cfg.blur_sigma_max - cfg.blur_sigma_min) * unit(rng);
    if (blur > 0.0) img = field::gaussian_smooth(img, blur);

    if (cfg.pixel_noise_std > 0.0) {
        std::normal_distribution<double> noise(0.0, cfg.pixel_noise_std);
        for (auto& v : img.v) v += noise(rng);
    }
    return {std::move(img), std::move(label)};
}

Federation build_federation(const SceneConfig& scene, const FederationLayout& layout,
                            const annsim::DifficultyParams& noise,
                            std::uint64_t master_seed) {
    scene.validate();
    layout.validate();
    noise.validate();

    Federation fed;
    fed.clients.resize(layout.client_counts.size());

    std::uint32_t next_id = 0;
    auto make_sample = [&](std::uint32_t id) {
        Sample s;
        s.id = id;
        auto [img, lab] = generate_scene(scene, derive_seed(master_seed, seed_tag::scene, id));
        s.image = std::move(img);
        s.label = std::move(lab);
        return s;
    };

    for (size_t ci = 0; ci < layout.client_counts.size(); ++ci) {
        auto& bucket = fed.clients[ci];
        bucket.reserve(layout.client_counts[ci]);
        for (long i = 0; i < layout.client_counts[ci]; ++i)
            bucket.push_back(make_sample(next_id++));

        const long m = layout.client_counts[ci];
        const long k = std::llround(layout.corruption_ratios[ci] * m);
        if (k > 0) {
            std::vector<long> idx(m);
            std::iota(idx.begin(), idx.end(), 0);
            auto rng = make_rng(derive_seed(master_seed, seed_tag::corrupt, ci));
            std::shuffle(idx.begin(), idx.end(), rng);
            const int n_corrupt = static_cast<int>(k);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(dynamic) if (sfcl::max_threads() > 1)
            for (int j = 0; j < n_corrupt; ++j) {
                Sample& s = bucket[idx[j]];
                std::set<int> fg;
                std::vector<char> seen(256, 0);
                for (auto v : s.label.v) seen[v] = 1;
                for (int c = 1; c < 256; ++c)
                    if (seen[c]) fg.insert(c);
                s.label = annsim::deform_multiclass(s.image, s.label, noise, fg);
                s.corrupted = true;
            }
        }
    }

    fed.test.reserve(layout.test_count);
    for (long i = 0; i < layout.test_count; ++i)
        fed.test.push_back(make_sample(next_id++));
    return fed;
}

}  // namespace sfcl::data
