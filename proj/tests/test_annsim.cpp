#include <doctest.h>

#include <cmath>
#include <random>

#include "sfcl/annsim.hpp"
#include "sfcl/field.hpp"
#include "sfcl/rng.hpp"

using namespace sfcl;

namespace {

constexpr double kPi = 3.14159265358979323846;

BinaryMask disk_mask(int n, double cy, double cx, double radius) {
    BinaryMask m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            m.set(r, c, (r - cy) * (r - cy) + (c - cx) * (c - cx) <= radius * radius);
    return m;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    long inter = 0, uni = 0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        inter += (a.v[i] && b.v[i]);
        uni += (a.v[i] || b.v[i]);
    }
    return uni ? static_cast<double>(inter) / uni : 1.0;
}

double label_iou(const LabelMask& a, const LabelMask& b, int classes) {
    double acc = 0.0;
    int counted = 0;
    for (int k = 1; k < classes; ++k) {
        long inter = 0, uni = 0;
        for (size_t i = 0; i < a.v.size(); ++i) {
            const bool pa = a.v[i] == k, pb = b.v[i] == k;
            inter += (pa && pb);
            uni += (pa || pb);
        }
        if (uni) {
            acc += static_cast<double>(inter) / uni;
            ++counted;
        }
    }
    return counted ? acc / counted : 1.0;
}

// smooth synthetic image with a bright disk on dark background
ScalarField disk_image(int n, double cy, double cx, double radius, double blur) {
    ScalarField img(n, n, 0.2);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            if ((r - cy) * (r - cy) + (c - cx) * (c - cx) <= radius * radius)
                img.at(r, c) = 0.8;
    return field::gaussian_smooth(img, blur);
}

}  // namespace

TEST_SUITE_BEGIN("annsim");

TEST_CASE("band_width: disk of radius 50") {
    BinaryMask m = disk_mask(128, 64, 64, 50.0);
    const long area = m.count_true();
    CHECK(area > 7700);
    CHECK(area < 7950);
    const double w = annsim::band_width(m);
    CHECK(w == doctest::Approx(0.2 * std::sqrt(area / kPi)).epsilon(1e-12));
    CHECK(w == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("band_width: three-pixel object") {
    BinaryMask m(4, 4);
    m.set(1, 1, true);
    m.set(1, 2, true);
    m.set(2, 1, true);
    CHECK(annsim::band_width(m) == doctest::Approx(0.2).epsilon(0.03));
}

TEST_CASE("band_width: 20x20 square") {
    BinaryMask m(40, 40);
    for (int r = 10; r < 30; ++r)
        for (int c = 10; c < 30; ++c) m.set(r, c, true);
    CHECK(annsim::band_width(m) == doctest::Approx(0.2 * std::sqrt(400.0 / kPi)).epsilon(1e-12));
    CHECK(annsim::band_width(m) == doctest::Approx(2.257).epsilon(0.001));
}

TEST_CASE("band_width: degenerate mask throws") {
    CHECK_THROWS_AS(annsim::band_width(BinaryMask(5, 5, true)), DegenerateMask);
    CHECK_THROWS_AS(annsim::band_width(BinaryMask(5, 5, false)), DegenerateMask);
}

TEST_CASE("edge_cue: constant image gives 1 on band, 0 off") {
    BinaryMask band(8, 8);
    band.set(3, 3, true);
    band.set(4, 4, true);
    const ScalarField cue = annsim::edge_cue(ScalarField(8, 8, 0.7), band);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c)
            CHECK(cue.at(r, c) == (band.at(r, c) ? 1.0 : 0.0));
}

TEST_CASE("edge_cue: zero at the strongest edge pixel") {
    ScalarField img(8, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 4; c < 8; ++c) img.at(r, c) = 1.0;
    BinaryMask band(8, 8, true);
    const ScalarField cue = annsim::edge_cue(img, band);
    CHECK(cue.at(4, 3) == 0.0);  // g normalized to 1 there
    CHECK(cue.at(4, 4) == 0.0);
}

TEST_CASE("edge and blur cues: all-false band zeroes everything") {
    ScalarField img(6, 6, 0.3);
    img.at(2, 2) = 0.9;
    const BinaryMask band(6, 6, false);
    for (double v : annsim::edge_cue(img, band).v) CHECK(v == 0.0);
    for (double v : annsim::blur_cue(img, band).v) CHECK(v == 0.0);
}

TEST_CASE("blur_cue: linear ramp gives 1 on band, impulse gives 0") {
    ScalarField ramp(8, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) ramp.at(r, c) = 0.1 * c;
    BinaryMask band(8, 8, false);
    for (int r = 2; r < 6; ++r)
        for (int c = 2; c < 6; ++c) band.set(r, c, true);
    const ScalarField cue = annsim::blur_cue(ramp, band);
    for (int r = 2; r < 6; ++r)
        for (int c = 2; c < 6; ++c) CHECK(cue.at(r, c) == doctest::Approx(1.0));

    ScalarField impulse(8, 8);
    impulse.at(4, 4) = 1.0;
    const ScalarField cue2 = annsim::blur_cue(impulse, band);
    CHECK(cue2.at(4, 4) == 0.0);
}

TEST_CASE("curvature_cue: flat vs disk boundary") {
    const int n = 41;
    ScalarField half(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) half.at(r, c) = 20.0 - r;  // straight boundary
    BinaryMask band = field::boundary_band(half, 2.0);
    const ScalarField flat = annsim::curvature_cue(half, band, 10.0);
    for (int r = 2; r < n - 2; ++r)
        for (int c = 2; c < n - 2; ++c)
            if (band.at(r, c)) CHECK(flat.at(r, c) < 0.05);

    ScalarField disk(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            disk.at(r, c) =
                std::sqrt((r - 20.0) * (r - 20.0) + (c - 20.0) * (c - 20.0)) - 10.0;
    BinaryMask dband = field::boundary_band(disk, 2.0);
    const ScalarField curved = annsim::curvature_cue(disk, dband, 10.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            if (dband.at(r, c))
                CHECK(curved.at(r, c) == doctest::Approx(1.0).epsilon(0.3));
}

TEST_CASE("difficulty_map: mean of cues, zero off band, in range") {
    const ScalarField img = disk_image(41, 20, 20, 10, 1.0);
    const BinaryMask mask = disk_mask(41, 20, 20, 10);
    annsim::DifficultyParams params;
    const annsim::DifficultyMap map = annsim::difficulty_map(img, mask, params);
    CHECK(map.w == doctest::Approx(annsim::band_width(mask)));
    for (size_t i = 0; i < map.D.v.size(); ++i) {
        CHECK(map.D.v[i] >= 0.0);
        CHECK(map.D.v[i] <= 1.0);
        if (!map.band.v[i]) CHECK(map.D.v[i] == 0.0);
    }
    // hand check one on-band pixel: D = (edge + blur + curv) / 3
    const ScalarField e = annsim::edge_cue(img, map.band);
    const ScalarField bl = annsim::blur_cue(img, map.band);
    const ScalarField cu =
        annsim::curvature_cue(field::signed_distance(mask), map.band,
                              map.w / params.band_coeff);
    for (int r = 0; r < 41; ++r)
        for (int c = 0; c < 41; ++c)
            if (map.band.at(r, c))
                CHECK(map.D.at(r, c) ==
                      doctest::Approx((e.at(r, c) + bl.at(r, c) + cu.at(r, c)) / 3.0));
}

TEST_CASE("amplitude: policy a_max = w, rho emphasis") {
    annsim::DifficultyParams params;  // rho=2, a_min=0, amax=w
    annsim::DifficultyMap map;
    map.w = 10.0;
    map.D = ScalarField(2, 2);
    map.band = BinaryMask(2, 2, true);
    map.band.set(1, 1, false);
    map.D.at(0, 0) = 1.0;
    map.D.at(0, 1) = 0.5;
    map.D.at(1, 0) = 0.0;
    map.D.at(1, 1) = 1.0;  // off band
    const ScalarField a = annsim::amplitude(map, params);
    CHECK(a.at(0, 0) == doctest::Approx(10.0));
    CHECK(a.at(0, 1) == doctest::Approx(2.5));  // 10 * 0.25
    CHECK(a.at(1, 0) == doctest::Approx(0.0));
    CHECK(a.at(1, 1) == 0.0);
}

TEST_CASE("direction: symmetric evidence gives 0, asymmetric saturates") {
    // object occupies x <= 16; band pixels sample g at x -/+ 4
    const int n = 33;
    ScalarField phi(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) phi.at(r, c) = c - 16.0;
    BinaryMask band = field::boundary_band(phi, 1.5);

    // textured interior (nonzero gradient everywhere for x <= 13), flat outside
    ScalarField img(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c <= 13; ++c)
            img.at(r, c) = 0.1 * std::sqrt((r + 5.0) * (r + 5.0) + (c + 5.0) * (c + 5.0));
    const ScalarField b = annsim::direction(img, phi, band, 4.0, 1e-6);
    for (int r = 1; r + 1 < n; ++r)
        for (int c = 0; c < n; ++c) {
            if (!band.at(r, c)) { CHECK(b.at(r, c) == 0.0); continue; }
            CHECK(b.at(r, c) > 0.9);  // evidence inside -> shrink
        }

    // mirrored texture outside the object flips the sign
    ScalarField img2(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 20; c < n; ++c)
            img2.at(r, c) = 0.1 * std::sqrt((r + 5.0) * (r + 5.0) + (n - c + 5.0) * (n - c + 5.0));
    const ScalarField b2 = annsim::direction(img2, phi, band, 4.0, 1e-6);
    for (int r = 1; r + 1 < n; ++r)
        for (int c = 0; c < n; ++c)
            if (band.at(r, c)) CHECK(b2.at(r, c) < -0.9);  // evidence outside -> expand

    // symmetric evidence: constant gradient image
    ScalarField img3(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) img3.at(r, c) = 0.3 * c;
    const ScalarField b3 = annsim::direction(img3, phi, band, 4.0, 1e-6);
    for (int r = 4; r + 4 < n; ++r)
        for (int c = 4; c + 4 < n; ++c)
            if (band.at(r, c)) CHECK(std::fabs(b3.at(r, c)) < 1e-9);
}

TEST_CASE("deform_class: zero difficulty is the identity") {
    // constant image in the band makes g=0 there... use a_min=a_max=0 instead
    const ScalarField img = disk_image(41, 20, 20, 10, 1.0);
    const BinaryMask mask = disk_mask(41, 20, 20, 10);
    annsim::DifficultyParams params;
    params.amax_scale = 0.0;  // a_max = a_min = 0
    const auto [noisy, rec] = annsim::deform_class(img, mask, params);
    CHECK(noisy == mask);
    CHECK(rec.changed_pixels == 0);
}

TEST_CASE("deform_class: uniform shrink reduces area") {
    const int n = 81;
    const BinaryMask mask = disk_mask(n, 40, 40, 25);
    // bright interior ring just inside the contour -> g_in > g_out -> shrink
    ScalarField img(n, n, 0.1);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double d = std::sqrt((r - 40.0) * (r - 40.0) + (c - 40.0) * (c - 40.0));
            if (d < 20.0) img.at(r, c) = 0.9;
        }
    img = field::gaussian_smooth(img, 1.0);
    annsim::DifficultyParams params;
    const auto [noisy, rec] = annsim::deform_class(img, mask, params);
    CHECK(noisy.count_true() < mask.count_true());
    for (double v : rec.b.v) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("deform_class: range invariants and locality") {
    auto rng = make_rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 64;
    for (int trial = 0; trial < 5; ++trial) {
        const double radius = 8.0 + 10.0 * u(rng);
        const double cy = 24 + 16 * u(rng), cx = 24 + 16 * u(rng);
        ScalarField img(n, n);
        for (auto& v : img.v) v = u(rng);
        img = field::gaussian_smooth(img, 1.5);
        const BinaryMask mask = disk_mask(n, cy, cx, radius);
        annsim::DifficultyParams params;
        const auto [noisy, rec] = annsim::deform_class(img, mask, params);

        const double w = annsim::band_width(mask);
        const double sigma = w;
        for (size_t i = 0; i < rec.A.v.size(); ++i) {
            CHECK(rec.A.v[i] >= 0.0);
            CHECK(rec.A.v[i] <= w + 1e-12);
            CHECK(rec.b.v[i] >= -1.0);
            CHECK(rec.b.v[i] <= 1.0);
        }
        for (size_t i = 0; i < noisy.v.size(); ++i)
            if (noisy.v[i] != mask.v[i])
                CHECK(std::fabs(rec.phi_before.v[i]) <= w + 3.0 * sigma);
    }
}

TEST_CASE("deform_multiclass: empty subset is the identity") {
    const ScalarField img = disk_image(41, 20, 20, 10, 1.0);
    LabelMask label(41, 41, 3, 0);
    const BinaryMask mask = disk_mask(41, 20, 20, 10);
    for (size_t i = 0; i < mask.v.size(); ++i)
        if (mask.v[i]) label.v[i] = 1;
    const LabelMask out =
        annsim::deform_multiclass(img, label, annsim::DifficultyParams{}, {});
    CHECK(out == label);
}

TEST_CASE("deform_multiclass: single class reduces to deform_class") {
    const ScalarField img = disk_image(41, 20, 20, 10, 1.0);
    const BinaryMask mask = disk_mask(41, 20, 20, 10);
    LabelMask label(41, 41, 2, 0);
    for (size_t i = 0; i < mask.v.size(); ++i)
        if (mask.v[i]) label.v[i] = 1;
    annsim::DifficultyParams params;
    const LabelMask out = annsim::deform_multiclass(img, label, params, {1});
    const auto [noisy, rec] = annsim::deform_class(img, mask, params);
    for (size_t i = 0; i < out.v.size(); ++i)
        CHECK(static_cast<bool>(out.v[i] == 1) == noisy.at(i / 41, i % 41));
}

TEST_CASE("deform_multiclass: argmin assignment with tie to lowest id") {
    // build two synthetic phi' fields by deforming nothing and checking the
    // conflict rule directly on overlapping disks
    const int n = 41;
    const ScalarField img = disk_image(n, 20, 16, 8, 1.0);
    LabelMask label(n, n, 3, 0);
    const BinaryMask m1 = disk_mask(n, 20, 14, 7);
    const BinaryMask m2 = disk_mask(n, 20, 26, 7);
    for (size_t i = 0; i < m1.v.size(); ++i) {
        if (m1.v[i]) label.v[i] = 1;
        else if (m2.v[i]) label.v[i] = 2;
    }
    const LabelMask out =
        annsim::deform_multiclass(img, label, annsim::DifficultyParams{}, {});
    CHECK(out == label);  // disjoint SDF interiors reproduce the label
}

TEST_CASE("deform_multiclass: missing class throws") {
    LabelMask label(8, 8, 3, 0);
    label.set(4, 4, 1);
    label.set(4, 5, 1);
    CHECK_THROWS_AS(annsim::deform_multiclass(ScalarField(8, 8, 0.5), label,
                                              annsim::DifficultyParams{}, {2}),
                    MissingClass);
}

TEST_CASE("deform pipeline is deterministic") {
    const ScalarField img = disk_image(51, 25, 25, 14, 1.2);
    const BinaryMask mask = disk_mask(51, 25, 25, 14);
    annsim::DifficultyParams params;
    const auto a = annsim::deform_class(img, mask, params);
    const auto b = annsim::deform_class(img, mask, params);
    CHECK(a.first == b.first);
    CHECK(a.second.phi_after.v == b.second.phi_after.v);
}

TEST_CASE("mean IoU decreases as a_max scales up") {
    // image edges offset from the mask contour give coherent direction
    // evidence, so the deformation actually engages
    auto rng = make_rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 64;
    double mean_iou[3] = {0, 0, 0};
    const double scales[3] = {0.5, 1.0, 2.0};
    int count = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const double radius = 10.0 + 8.0 * u(rng);
        const double cy = 24 + 16 * u(rng), cx = 24 + 16 * u(rng);
        const BinaryMask mask = disk_mask(n, cy, cx, radius);
        ScalarField img = disk_image(n, cy + 2.0, cx - 2.0, radius, 1.5);
        for (auto& v : img.v) v += 0.08 * (u(rng) - 0.5);
        ++count;
        for (int s = 0; s < 3; ++s) {
            annsim::DifficultyParams params;
            params.amax_scale = 6.0 * scales[s];  // desk-scale base amplitude
            const auto [noisy, rec] = annsim::deform_class(img, mask, params);
            mean_iou[s] += mask_iou(mask, noisy);
        }
    }
    for (double& x : mean_iou) x /= count;
    CHECK(mean_iou[0] > mean_iou[1]);
    CHECK(mean_iou[1] > mean_iou[2]);
    CHECK(mean_iou[2] > 0.3);   // deformation bounded
    CHECK(mean_iou[0] < 1.0);   // some deformation happened
}

TEST_SUITE_END();
