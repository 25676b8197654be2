#include "marior/mrm.hpp"

#include <array>
#include <cmath>

#include "marior/errors.hpp"
#include "marior/morphology.hpp"

namespace marior {

double otsu_threshold(const Raster& gray) {
    std::array<double, 256> hist{};
    for (float v : gray.data()) ++hist[static_cast<std::size_t>(std::lround(v * 255.0f))];
    const double total = static_cast<double>(gray.data().size());
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += i * hist[i];
    double weight_bg = 0.0, sum_bg = 0.0, best = -1.0;
    int best_t = 0;
    for (int t = 0; t < 256; ++t) {
        weight_bg += hist[t];
        if (weight_bg == 0.0) continue;
        const double weight_fg = total - weight_bg;
        if (weight_fg == 0.0) break;
        sum_bg += t * hist[t];
        const double mean_bg = sum_bg / weight_bg;
        const double mean_fg = (sum_all - sum_bg) / weight_fg;
        const double between = weight_bg * weight_fg * (mean_bg - mean_fg) * (mean_bg - mean_fg);
        if (between > best) {
            best = between;
            best_t = t;
        }
    }
    if (best <= 0.0) return -1.0;
    // Foreground is strictly above the returned value.
    return (best_t + 0.5) / 255.0;
}

Segmentation segment_document(const Raster& img) {
    if (img.empty()) throw InvalidArgument("segment_document: empty image");
    const Raster gray = to_grayscale(img);
    const double t = otsu_threshold(gray);
    if (t < 0.0) throw NoDocument("segment_document: image has no intensity contrast");

    // The document is whichever class is rarer along the image border.
    const int w = gray.width();
    const int h = gray.height();
    long border = 0, border_bright = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (x != 0 && y != 0 && x != w - 1 && y != h - 1) continue;
            ++border;
            if (gray.at(x, y) > t) ++border_bright;
        }
    const bool document_bright = 2 * border_bright <= border;
    BinaryMask fg(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) fg.set(x, y, (gray.at(x, y) > t) == document_bright);

    BinaryMask doc = close(fill_holes(largest_component(fg)), 2);
    const double area = static_cast<double>(w) * h;
    if (static_cast<double>(doc.count()) < 0.01 * area) throw NoDocument("segment_document: no sizeable document region");
    BinaryMask edge = dilate(inner_boundary(doc), 1);
    return {std::move(doc), std::move(edge)};
}

BinaryMask clean_mask(const BinaryMask& mask) { return fill_holes(largest_component(mask)); }

MrmOutcome margin_removal(const Raster& img, const BinaryMask& mask, const MrmConfig& cfg) {
    if (img.width() != mask.width() || img.height() != mask.height())
        throw DimensionMismatch("margin_removal: image and mask dimensions differ");
    if (!(cfg.iou_skip_threshold > 0.0 && cfg.iou_skip_threshold <= 1.0))
        throw InvalidArgument("margin_removal: IoU threshold must lie in (0, 1]");
    if (cfg.control_points_per_edge < 0) throw InvalidArgument("margin_removal: negative control point count");

    MrmOutcome outcome;
    outcome.preliminary = img;
    outcome.mask_used = clean_mask(mask);
    try {
        const DocumentQuad quad = extract_document_quad_relative(outcome.mask_used, cfg.corner_epsilon_fraction);
        ControlGrid grid = boundary_control_points(outcome.mask_used, quad, cfg.control_points_per_edge);
        const BinaryMask grid_mask = mask_from_control_grid(grid, img.width(), img.height());
        outcome.iou_score = iou(outcome.mask_used, grid_mask);
        if (outcome.iou_score < cfg.iou_skip_threshold) return outcome;
        outcome.preliminary = tps_warp(img, grid, cfg.tps_regularization);
        outcome.grid = std::move(grid);
        outcome.skipped = false;
    } catch (const DegenerateMask&) {
    } catch (const SingularSystem&) {
    } catch (const InvalidArgument&) {
    }
    if (outcome.skipped) outcome.preliminary = img;
    return outcome;
}

}  // namespace marior
