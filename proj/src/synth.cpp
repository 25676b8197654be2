#include "marior/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "marior/errors.hpp"
#include "marior/morphology.hpp"
#include "marior/rng.hpp"

namespace marior {

Matrix3 identity_homography() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

Matrix3 translation_homography(double tx, double ty) { return {{{1, 0, tx}, {0, 1, ty}, {0, 0, 1}}}; }

Point2 apply_homography(const Matrix3& h, Point2 p) {
    const double x = h[0][0] * p.x + h[0][1] * p.y + h[0][2];
    const double y = h[1][0] * p.x + h[1][1] * p.y + h[1][2];
    const double z = h[2][0] * p.x + h[2][1] * p.y + h[2][2];
    return {x / z, y / z};
}

namespace {

double determinant(const Matrix3& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

double frobenius(const Matrix3& m) {
    double s = 0.0;
    for (const auto& row : m)
        for (double v : row) s += v * v;
    return std::sqrt(s);
}

Matrix3 normalise_determinant(Matrix3 m) {
    const double det = determinant(m);
    if (det == 0.0 || !std::isfinite(det)) throw InvalidArgument("degenerate homography");
    const double s = 1.0 / std::cbrt(det);
    for (auto& row : m)
        for (double& v : row) v *= s;
    return m;
}

}  // namespace

Matrix3 invert(const Matrix3& m) {
    const double det = determinant(m);
    if (det == 0.0 || !std::isfinite(det)) throw InvalidArgument("degenerate homography");
    Matrix3 r{};
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    return r;
}

Matrix3 homography_from_points(const std::array<Point2, 4>& src, const std::array<Point2, 4>& dst) {
    // h22 fixed to 1; two equations per correspondence.
    std::vector<double> a(64, 0.0);
    std::vector<double> b(8, 0.0);
    for (int i = 0; i < 4; ++i) {
        const double x = src[i].x, y = src[i].y, u = dst[i].x, v = dst[i].y;
        double* r0 = &a[static_cast<std::size_t>(2 * i) * 8];
        double* r1 = &a[static_cast<std::size_t>(2 * i + 1) * 8];
        r0[0] = x, r0[1] = y, r0[2] = 1, r0[6] = -u * x, r0[7] = -u * y;
        r1[3] = x, r1[4] = y, r1[5] = 1, r1[6] = -v * x, r1[7] = -v * y;
        b[2 * i] = u;
        b[2 * i + 1] = v;
    }
    const auto h = solve_dense(std::move(a), std::move(b), 8);
    return normalise_determinant({{{h[0], h[1], h[2]}, {h[3], h[4], h[5]}, {h[6], h[7], 1.0}}});
}

GeneratedDocument generate_document(int width, int height, std::uint64_t seed) {
    if (width < 128 || height < 128) throw InvalidArgument("generate_document: dimensions must be >= 128");
    SplitMix64 rng(seed);
    Raster page(width, height, 1, 1.0f);

    const int pad_x = width / 12;
    const int pad_y = height / 12;
    const int text_w = width - 2 * pad_x;

    struct Band {
        int y0, y1, x0, x1;
        float value;
    };
    std::vector<Band> figures;
    const int figure_count = rng.uniform_int(0, 2);
    for (int f = 0; f < figure_count; ++f) {
        const int fh = rng.uniform_int(height / 10, height / 5);
        const int fw = static_cast<int>(text_w * rng.uniform(0.3, 0.6));
        const int y0 = rng.uniform_int(pad_y, height - pad_y - fh);
        const int x0 = pad_x + rng.uniform_int(0, text_w - fw);
        figures.push_back({y0, y0 + fh, x0, x0 + fw, static_cast<float>(rng.uniform(0.3, 0.45))});
    }
    auto in_figure_rows = [&](int y0, int y1) {
        return std::any_of(figures.begin(), figures.end(),
                           [&](const Band& b) { return y0 < b.y1 + 4 && y1 > b.y0 - 4; });
    };

    for (const Band& b : figures)
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x) page.at(x, y) = b.value;

    int y = pad_y;
    while (true) {
        const int line_h = rng.uniform_int(8, 14);
        if (y + line_h > height - pad_y) break;
        const int length = static_cast<int>(text_w * rng.uniform(0.4, 1.0));
        const float ink = static_cast<float>(rng.uniform(0.05, 0.2));
        if (!in_figure_rows(y, y + line_h)) {
            for (int yy = y; yy < y + line_h; ++yy)
                for (int x = pad_x; x < pad_x + length; ++x) page.at(x, yy) = ink;
        }
        y += line_h + rng.uniform_int(6, 14);
    }

    BinaryMask content(width, height);
    for (int yy = 0; yy < height; ++yy)
        for (int x = 0; x < width; ++x) content.set(x, yy, page.at(x, yy) < 0.5f);
    return {std::move(page), std::move(content)};
}

Point2 backward_map(const WarpParams& params, int page_width, Point2 canvas_point) {
    const Point2 u = apply_homography(invert(params.homography), canvas_point);
    const double phase = 2.0 * std::numbers::pi * params.curl_frequency * u.x / page_width + params.curl_phase;
    return {u.x, u.y + params.curl_amplitude * std::sin(phase)};
}

Point2 forward_map(const WarpParams& params, int page_width, Point2 page_point) {
    const Matrix3 inv = invert(params.homography);
    auto b = [&](Point2 p) {
        const Point2 u = apply_homography(inv, p);
        const double phase = 2.0 * std::numbers::pi * params.curl_frequency * u.x / page_width + params.curl_phase;
        return Point2{u.x, u.y + params.curl_amplitude * std::sin(phase)};
    };
    return invert_map(b, page_point, apply_homography(params.homography, page_point), 60, 1e-10);
}

namespace {

std::vector<float> margin_texture(MarginTexture kind, std::uint64_t seed, int width, int height) {
    std::vector<float> tex(static_cast<std::size_t>(width) * height);
    SplitMix64 rng(seed);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            float v = 0.3f;
            if (kind == MarginTexture::Checker) v = ((x / 16 + y / 16) % 2 == 0) ? 0.15f : 0.4f;
            if (kind == MarginTexture::Noise) v = static_cast<float>(0.45 * rng.uniform());
            tex[static_cast<std::size_t>(y) * width + x] = v;
        }
    }
    return tex;
}

}  // namespace

SynthSample warp_document(const Raster& clean, const BinaryMask& content_mask, const WarpParams& params,
                          int canvas_width, int canvas_height) {
    if (canvas_width <= 0 || canvas_height <= 0) throw InvalidArgument("warp_document: empty canvas");
    if (content_mask.width() != clean.width() || content_mask.height() != clean.height())
        throw DimensionMismatch("warp_document: content mask does not match the page");
    if (params.curl_amplitude < 0.0) throw InvalidArgument("warp_document: negative curl amplitude");
    const Matrix3 inv = invert(params.homography);
    if (frobenius(params.homography) * frobenius(inv) >= 1e6) throw InvalidArgument("degenerate homography");

    const int pw = clean.width();
    const int ph = clean.height();
    const auto texture = margin_texture(params.margin_texture, params.texture_seed, canvas_width, canvas_height);

    SynthSample s;
    s.clean = clean;
    s.clean_content_mask = content_mask;
    s.params = params;
    s.distorted = Raster(canvas_width, canvas_height, clean.channels());
    s.gt_backward = DisplacementFlow(canvas_width, canvas_height);
    s.doc_mask = BinaryMask(canvas_width, canvas_height);
    s.content_mask = BinaryMask(canvas_width, canvas_height);

    for (int y = 0; y < canvas_height; ++y) {
        for (int x = 0; x < canvas_width; ++x) {
            const Point2 p{static_cast<double>(x), static_cast<double>(y)};
            const Point2 q = backward_map(params, pw, p);
            const bool inside = q.x >= 0.0 && q.y >= 0.0 && q.x <= pw - 1.0 && q.y <= ph - 1.0;
            if (inside) {
                const PixelValue v = bilinear_at(clean, q.x, q.y);
                for (int c = 0; c < clean.channels(); ++c) s.distorted.at(x, y, c) = static_cast<float>(v[c]);
                s.gt_backward.at(x, y) = {q.x - p.x, q.y - p.y};
                s.doc_mask.set(x, y, true);
                s.content_mask.set(x, y, content_mask.at(static_cast<int>(std::lround(q.x)), static_cast<int>(std::lround(q.y))));
            } else {
                const float t = texture[static_cast<std::size_t>(y) * canvas_width + x];
                for (int c = 0; c < clean.channels(); ++c) s.distorted.at(x, y, c) = t;
            }
        }
    }
    s.edge_mask = inner_boundary(s.doc_mask);

    if (params.margin_fraction > 0.0) {
        const int m = static_cast<int>(params.margin_fraction * std::min(canvas_width, canvas_height));
        for (int y = 0; y < canvas_height; ++y)
            for (int x = 0; x < canvas_width; ++x)
                if (s.doc_mask.at(x, y) && (x < m || y < m || x >= canvas_width - m || y >= canvas_height - m))
                    throw InvalidArgument("warp_document: canvas too small for the requested margin");
    }
    return s;
}

WarpParams random_warp_params(std::uint64_t seed, const SynthOptions& o) {
    SplitMix64 rng(seed ^ 0xA5A5A5A5DEADBEEFULL);
    const double pw = o.page_width - 1.0;
    const double ph = o.page_height - 1.0;
    const double jitter = o.perspective * std::min(o.page_width, o.page_height);
    const double cx = (o.canvas_width - 1) / 2.0;
    const double cy = (o.canvas_height - 1) / 2.0;

    const std::array<Point2, 4> page{Point2{0, 0}, Point2{pw, 0}, Point2{pw, ph}, Point2{0, ph}};
    std::array<Point2, 4> canvas{};
    for (int i = 0; i < 4; ++i) {
        const Point2 centred{page[i].x - pw / 2.0 + cx, page[i].y - ph / 2.0 + cy};
        canvas[i] = {centred.x + rng.uniform(-jitter, jitter), centred.y + rng.uniform(-jitter, jitter)};
    }

    WarpParams p;
    p.homography = homography_from_points(page, canvas);
    p.curl_amplitude = o.curl_amplitude;
    p.curl_frequency = rng.uniform(1.0, 1.5);
    p.curl_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    p.margin_fraction = o.margin_fraction;
    p.margin_texture = o.margin_texture;
    p.texture_seed = rng.next();
    return p;
}

SynthSample make_sample(std::uint64_t seed, const SynthOptions& options) {
    const GeneratedDocument doc = generate_document(options.page_width, options.page_height, seed);
    SynthSample s = warp_document(doc.clean, doc.content_mask, random_warp_params(seed, options), options.canvas_width,
                                  options.canvas_height);
    s.seed = seed;
    return s;
}

Raster clean_in_output_frame(const Raster& clean, int output_width, int output_height) {
    Raster out(output_width, output_height, clean.channels());
    const double sx = output_width > 1 ? (clean.width() - 1.0) / (output_width - 1.0) : 0.0;
    const double sy = output_height > 1 ? (clean.height() - 1.0) / (output_height - 1.0) : 0.0;
    for (int y = 0; y < output_height; ++y)
        for (int x = 0; x < output_width; ++x) {
            const PixelValue v = bilinear_at(clean, x * sx, y * sy);
            for (int c = 0; c < clean.channels(); ++c) out.at(x, y, c) = static_cast<float>(v[c]);
        }
    return out;
}

DisplacementFlow residual_flow_after_warp(const SynthSample& sample, const ControlGrid& grid, double regularization) {
    const TpsTransform backward = TpsTransform::fit(grid.target_points, grid.source_points, regularization);
    const int w = grid.output_width;
    const int h = grid.output_height;
    const double sx = w > 1 ? (sample.clean.width() - 1.0) / (w - 1.0) : 0.0;
    const double sy = h > 1 ? (sample.clean.height() - 1.0) / (h - 1.0) : 0.0;
    const int pw = sample.clean.width();
    auto tps = [&](Point2 p) { return backward.apply(p); };

    DisplacementFlow flow(w, h);
    FlowVector previous{0.0, 0.0};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Point2 p{static_cast<double>(x), static_cast<double>(y)};
            const Point2 canvas = forward_map(sample.params, pw, {x * sx, y * sy});
            const FlowVector seed = x == 0 && y > 0 ? flow.at(0, y - 1) : previous;
            const Point2 r = invert_map(tps, canvas, {p.x + seed.du, p.y + seed.dv}, 30, 1e-9);
            previous = {r.x - p.x, r.y - p.y};
            flow.at(x, y) = previous;
        }
    }
    return flow;
}

Raster unwarp_to_clean(const SynthSample& sample) {
    const int pw = sample.clean.width();
    Raster out(pw, sample.clean.height(), sample.distorted.channels());
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            const Point2 p = forward_map(sample.params, pw, {static_cast<double>(x), static_cast<double>(y)});
            const PixelValue v = bilinear_at(sample.distorted, p.x, p.y);
            for (int c = 0; c < out.channels(); ++c) out.at(x, y, c) = static_cast<float>(v[c]);
        }
    return out;
}

std::string to_string(MarginTexture texture) {
    switch (texture) {
        case MarginTexture::SolidGray: return "solid";
        case MarginTexture::Checker: return "checker";
        case MarginTexture::Noise: return "noise";
    }
    return "solid";
}

MarginTexture margin_texture_from_string(const std::string& name) {
    if (name == "solid") return MarginTexture::SolidGray;
    if (name == "checker") return MarginTexture::Checker;
    if (name == "noise") return MarginTexture::Noise;
    throw InvalidArgument("unknown margin texture: " + name);
}

}  // namespace marior
