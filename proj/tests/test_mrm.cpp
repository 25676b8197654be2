#include "marior/errors.hpp"
#include "marior/morphology.hpp"
#include "marior/mrm.hpp"
#include "marior/synth.hpp"

#include "doctest.h"
#include "support.hpp"

#include <cmath>

using namespace marior;

namespace {

// Maps a clean-page corner into the preliminary image through the sample's
// forward map and the inverse of the fitted backward TPS.
Point2 corner_in_output(const SynthSample& s, const MrmOutcome& m, Point2 page_corner) {
    const Point2 canvas = forward_map(s.params, s.clean.width(), page_corner);
    const TpsTransform t = tps_fit(m.grid->target_points, m.grid->source_points, MrmConfig{}.tps_regularization);
    const Point2 guess{page_corner.x * (m.grid->output_width - 1.0) / (s.clean.width() - 1.0),
                       page_corner.y * (m.grid->output_height - 1.0) / (s.clean.height() - 1.0)};
    return invert_map([&](Point2 p) { return t.apply(p); }, canvas, guess);
}

}  // namespace

TEST_CASE("otsu threshold separates two levels") {
    Raster r(10, 10, 1, 0.2f);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 4; ++x) r.at(x, y) = 0.8f;
    const double t = otsu_threshold(r);
    CHECK(t > 0.2);
    CHECK(t < 0.8);
    CHECK(otsu_threshold(Raster(5, 5, 1, 0.5f)) < 0.0);
}

TEST_CASE("segmenting synthetic pages") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        SynthOptions o;
        o.margin_texture = static_cast<MarginTexture>(seed % 3);
        o.curl_amplitude = static_cast<double>(seed % 5);
        const SynthSample s = make_sample(seed, o);
        const Segmentation seg = segment_document(s.distorted);
        CHECK(iou(seg.doc_mask, s.doc_mask) >= 0.90);
        const BinaryMask grown = dilate(seg.doc_mask, 1);
        for (int y = 0; y < seg.edge_mask.height(); ++y)
            for (int x = 0; x < seg.edge_mask.width(); ++x)
                if (seg.edge_mask.at(x, y)) CHECK(grown.at(x, y));
    }
}

TEST_CASE("uniform images have no document") {
    CHECK_THROWS_AS(segment_document(Raster(64, 64, 3, 0.5f)), NoDocument);
    Raster speck(100, 100, 1, 0.0f);
    speck.at(50, 50) = 1.0f;
    CHECK_THROWS_AS(segment_document(speck), NoDocument);
    CHECK_THROWS_AS(segment_document(Raster()), InvalidArgument);
}

TEST_CASE("segmentation masks survive a PGM round trip") {
    testing::TempDir dir;
    const Segmentation seg = segment_document(make_sample(3).distorted);
    write_mask(seg.doc_mask, dir / "doc.pgm");
    CHECK(read_mask(dir / "doc.pgm") == seg.doc_mask);
}

TEST_CASE("clean_mask keeps the main blob and fills holes") {
    BinaryMask m(60, 60);
    for (int y = 10; y < 50; ++y)
        for (int x = 10; x < 50; ++x) m.set(x, y, true);
    m.set(30, 30, false);
    m.set(31, 30, false);
    for (int i = 0; i < 5; ++i) m.set(2 + 11 * i, 55, true);
    const BinaryMask c = clean_mask(m);
    CHECK(c.count() == 1600u);
    CHECK(c.at(30, 30));
    CHECK_FALSE(c.at(2, 55));
    CHECK(clean_mask(BinaryMask(8, 8)).count() == 0u);
}

TEST_CASE("margin removal on perspective pages") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const SynthSample s = make_sample(seed);
        const MrmOutcome m = margin_removal(s.distorted, s.doc_mask);
        REQUIRE_FALSE(m.skipped);
        REQUIRE(m.grid.has_value());
        CHECK(m.iou_score >= 0.96);
        CHECK(m.grid->source_points.size() == 16u);
        CHECK(m.preliminary.width() == m.grid->output_width);
        CHECK(m.preliminary.height() == m.grid->output_height);
        const double pw = s.clean.width() - 1.0, ph = s.clean.height() - 1.0;
        const double ow = m.grid->output_width - 1.0, oh = m.grid->output_height - 1.0;
        const std::array<std::pair<Point2, Point2>, 4> corners{{{{0, 0}, {0, 0}},
                                                                {{pw, 0}, {ow, 0}},
                                                                {{pw, ph}, {ow, oh}},
                                                                {{0, ph}, {0, oh}}}};
        for (const auto& [page, out] : corners) CHECK(distance(corner_in_output(s, m, page), out) <= 2.0);
    }
}

TEST_CASE("margin removal is deterministic") {
    const SynthSample s = make_sample(8);
    const MrmOutcome a = margin_removal(s.distorted, s.doc_mask), b = margin_removal(s.distorted, s.doc_mask);
    CHECK(a.preliminary == b.preliminary);
    CHECK(a.iou_score == b.iou_score);
}

TEST_CASE("ragged masks and empty masks are skipped") {
    const Raster img = testing::random_raster(120, 100, 3, 5);
    BinaryMask ragged(120, 100);
    for (int y = 0; y < 100; ++y) {
        const int reach = 20 + static_cast<int>(40 + 35 * std::sin(y * 0.7));
        for (int x = 0; x < reach; ++x) ragged.set(x, y, true);
    }
    const MrmOutcome r = margin_removal(img, ragged);
    CHECK(r.skipped);
    CHECK(r.iou_score < 0.96);
    CHECK(r.preliminary == img);
    CHECK_FALSE(r.grid.has_value());

    const MrmOutcome e = margin_removal(img, BinaryMask(120, 100));
    CHECK(e.skipped);
    CHECK(e.preliminary == img);
    CHECK_THROWS_AS(margin_removal(img, BinaryMask(10, 10)), DimensionMismatch);
}

TEST_CASE("a mask equal to its own control polygon is self-consistent") {
    const SynthSample s = make_sample(4);
    const BinaryMask cleaned = clean_mask(s.doc_mask);
    const DocumentQuad q = extract_document_quad_relative(cleaned, 0.02);
    const ControlGrid g = boundary_control_points(cleaned, q, 3);
    const BinaryMask poly = mask_from_control_grid(g, s.doc_mask.width(), s.doc_mask.height());
    const MrmOutcome m = margin_removal(s.distorted, poly);
    CHECK(m.iou_score >= 0.98);
    CHECK_FALSE(m.skipped);
}

TEST_CASE("skip threshold of one rejects imperfect grids") {
    const SynthSample s = make_sample(2);
    MrmConfig strict;
    strict.iou_skip_threshold = 1.0;
    const MrmOutcome m = margin_removal(s.distorted, s.doc_mask, strict);
    CHECK(m.skipped);
    CHECK(m.preliminary == s.distorted);
    MrmConfig bad;
    bad.iou_skip_threshold = 0.0;
    CHECK_THROWS_AS(margin_removal(s.distorted, s.doc_mask, bad), InvalidArgument);
}
