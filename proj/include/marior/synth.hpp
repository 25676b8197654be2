#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "marior/geometry.hpp"
#include "marior/raster.hpp"
#include "marior/warpfield.hpp"

namespace marior {

using Matrix3 = std::array<std::array<double, 3>, 3>;

Matrix3 identity_homography();
Matrix3 translation_homography(double tx, double ty);

// Maps src[i] to dst[i] (direct linear transform), normalised to unit determinant.
Matrix3 homography_from_points(const std::array<Point2, 4>& src, const std::array<Point2, 4>& dst);

Point2 apply_homography(const Matrix3& h, Point2 p);
Matrix3 invert(const Matrix3& m);

enum class MarginTexture { SolidGray, Checker, Noise };

struct WarpParams {
    Matrix3 homography = identity_homography();  // clean page -> canvas
    double curl_amplitude = 0.0;                 // pixels
    double curl_frequency = 1.0;                 // cycles per page width
    double curl_phase = 0.0;                     // radians
    double margin_fraction = 0.0;
    MarginTexture margin_texture = MarginTexture::SolidGray;
    std::uint64_t texture_seed = 0;
};

struct SynthSample {
    Raster clean;
    Raster distorted;
    DisplacementFlow gt_backward;  // canvas pixel p -> page coordinate p + gt(p)
    BinaryMask doc_mask;
    BinaryMask edge_mask;
    BinaryMask content_mask;  // canvas frame
    BinaryMask clean_content_mask;
    WarpParams params;
    std::uint64_t seed = 0;
};

struct GeneratedDocument {
    Raster clean;
    BinaryMask content_mask;
};

// White page with dark text-line bars and up to two gray figure blocks.
// content_mask marks pixels darker than 0.5. Both dimensions must be >= 128.
GeneratedDocument generate_document(int width, int height, std::uint64_t seed);

// Backward map from a canvas pixel to clean page coordinates:
// B(p) = H^-1 p + (0, A sin(2 pi f u.x / w + phi)), u = H^-1 p.
Point2 backward_map(const WarpParams& params, int page_width, Point2 canvas_point);

// Numerical inverse of backward_map: clean page coordinate -> canvas.
Point2 forward_map(const WarpParams& params, int page_width, Point2 page_point);

SynthSample warp_document(const Raster& clean, const BinaryMask& content_mask, const WarpParams& params,
                          int canvas_width, int canvas_height);

struct SynthOptions {
    int page_width = 256;
    int page_height = 320;
    int canvas_width = 384;
    int canvas_height = 448;
    double perspective = 0.06;  // corner jitter as a fraction of the smaller page side
    double curl_amplitude = 0.0;
    double margin_fraction = 0.08;
    MarginTexture margin_texture = MarginTexture::Noise;
};

// Deterministic random warp: the page is centred in the canvas inside the
// margin and each corner is jittered independently.
WarpParams random_warp_params(std::uint64_t seed, const SynthOptions& options);

// generate_document + random_warp_params + warp_document.
SynthSample make_sample(std::uint64_t seed, const SynthOptions& options = {});

// Clean page resampled onto an output rectangle whose corner pixels coincide
// with the page corners.
Raster clean_in_output_frame(const Raster& clean, int output_width, int output_height);

// Residual backward flow on the margin-removed frame: sampling the
// tps_warp(distorted, grid) output with it yields clean_in_output_frame.
DisplacementFlow residual_flow_after_warp(const SynthSample& sample, const ControlGrid& grid, double regularization);

// Reconstructs the clean page from the distorted canvas by inverting the
// backward map at every page pixel.
Raster unwarp_to_clean(const SynthSample& sample);

std::string to_string(MarginTexture texture);
MarginTexture margin_texture_from_string(const std::string& name);

}  // namespace marior
