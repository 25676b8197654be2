#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "marior/raster.hpp"
#include "marior/warpfield.hpp"

namespace marior {

struct MsSsimParams {
    std::array<double, 5> scale_weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

// Five-scale structural similarity on luma, Gaussian-windowed statistics over
// valid window positions, 2x2 mean downsampling between scales. Negative
// per-scale terms keep their sign through the weighted geometric mean, so
// the result lies in [-1, 1]. Requires min(width, height) >= window * 16.
double ms_ssim(const Raster& a, const Raster& b, const MsSsimParams& params = {});

// Mean per-pixel magnitude of a dense correspondence field.
double local_distortion(const DisplacementFlow& correspondence);

// Exhaustive SSD block matching on a regular grid of patch x patch blocks,
// searching +-search pixels over lightly smoothed luma. The returned field
// follows the sampling convention: a(p) ~ b(p + field(p)). Offsets whose SSD
// is within 5% (plus 1e-3 per pixel) of the best are ties; ties go to the
// smallest displacement, then lexicographically smallest (dv, du).
DisplacementFlow estimate_dense_flow(const Raster& a, const Raster& b, int patch = 16, int search = 24);

// Unit-cost Levenshtein distance over Unicode code points.
std::size_t edit_distance(const std::u32string& a, const std::u32string& b);

// Decodes UTF-8; malformed bytes map to U+FFFD.
std::u32string decode_utf8(std::string_view text);

// (substitutions + insertions + deletions) / reference length. May exceed 1.
double cer(std::string_view recognized, std::string_view reference);

}  // namespace marior
