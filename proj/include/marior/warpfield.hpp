#pragma once

#include <filesystem>
#include <vector>

#include "marior/raster.hpp"

namespace marior {

struct FlowVector {
    double du = 0.0;
    double dv = 0.0;

    friend bool operator==(FlowVector, FlowVector) = default;
};

// Per-pixel displacement in pixels. Backward convention: the output pixel p
// reads the input at p + flow(p).
class DisplacementFlow {
public:
    DisplacementFlow() = default;
    DisplacementFlow(int width, int height, FlowVector fill = {});

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return vectors_.empty(); }

    FlowVector at(int x, int y) const { return vectors_[static_cast<std::size_t>(y) * width_ + x]; }
    FlowVector& at(int x, int y) { return vectors_[static_cast<std::size_t>(y) * width_ + x]; }

    const std::vector<FlowVector>& vectors() const { return vectors_; }
    std::vector<FlowVector>& vectors() { return vectors_; }

    friend bool operator==(const DisplacementFlow&, const DisplacementFlow&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<FlowVector> vectors_;
};

struct FlowStats {
    double variance = 0.0;        // pixels^2, pooled over both components
    double mean_magnitude = 0.0;  // pixels
};

// out(p) = bilinear_at(img, p + flow(p)).
Raster sample(const Raster& img, const DisplacementFlow& flow);

// Bilinear lookup of the field itself, clamp-to-edge.
FlowVector flow_at(const DisplacementFlow& flow, double x, double y);

DisplacementFlow accumulate_sum(const DisplacementFlow& cumulative, const DisplacementFlow& d_new);

// out(p) = d_new(p) + cumulative(p + d_new(p)), so that
// sample(img, out) == sample(sample(img, cumulative), d_new) up to interpolation error.
DisplacementFlow accumulate_compose(const DisplacementFlow& cumulative_prev, const DisplacementFlow& d_new);

FlowStats flow_stats(const DisplacementFlow& flow);

// Multiplies du by sx and dv by sy.
DisplacementFlow scale_vectors(const DisplacementFlow& flow, double sx, double sy);

// Little-endian: float32 202021.25, int32 width, int32 height, then
// width*height interleaved float32 (u, v), row-major. Vectors are stored as
// float32, so the round trip is bit-exact for float-representable values.
DisplacementFlow read_flow(const std::filesystem::path& path);
void write_flow(const DisplacementFlow& flow, const std::filesystem::path& path);

}  // namespace marior
