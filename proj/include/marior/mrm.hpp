#pragma once

#include <optional>

#include "marior/geometry.hpp"
#include "marior/raster.hpp"

namespace marior {

struct MrmConfig {
    double iou_skip_threshold = 0.96;
    int control_points_per_edge = 3;
    double corner_epsilon_fraction = 0.02;
    double tps_regularization = 1e-3;
};

struct MrmOutcome {
    Raster preliminary;
    bool skipped = true;
    std::optional<ControlGrid> grid;
    BinaryMask mask_used;
    double iou_score = 0.0;
};

struct Segmentation {
    BinaryMask doc_mask;
    BinaryMask edge_mask;
};

// Otsu threshold on luma, foreground being the class rarer on the border,
// largest component, holes filled, closing with radius 2. The edge mask is
// the component boundary dilated by 1. Throws NoDocument.
Segmentation segment_document(const Raster& img);

// Otsu threshold in [0,1] over a 256-bin histogram of 1-channel samples.
double otsu_threshold(const Raster& gray);

// Largest 8-connected component with enclosed holes filled.
BinaryMask clean_mask(const BinaryMask& mask);

// Corner detection, control points, TPS warp. Falls back to returning the
// input unchanged (skipped = true) when the control-grid polygon overlaps the
// cleaned mask below the threshold or any geometric step fails.
MrmOutcome margin_removal(const Raster& img, const BinaryMask& mask, const MrmConfig& cfg = {});

}  // namespace marior
