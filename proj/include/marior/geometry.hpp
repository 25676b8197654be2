#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "marior/raster.hpp"

namespace marior {

// Ordered vertices in pixel coordinates (y down). Closed region contours are
// stored with positive shoelace area, i.e. top edge left-to-right first.
using Polygon = std::vector<Point2>;

enum class Closure { Open, Closed };

double signed_area(std::span<const Point2> polygon);
double perimeter(std::span<const Point2> polygon, Closure closure = Closure::Closed);

// Distance from p to the segment [a, b].
double segment_distance(Point2 p, Point2 a, Point2 b);

// Douglas-Peucker. A vertex is dropped only when its distance to the kept
// chain is strictly below epsilon, so epsilon 0 returns the input. Closed
// contours are split at their two mutually farthest vertices and each half
// simplified separately.
Polygon simplify_polygon(std::span<const Point2> points, double epsilon, Closure closure = Closure::Open);

// Outer boundary of the largest 8-connected component (Moore-neighbour
// tracing), as pixel centres with positive orientation. Empty mask -> empty.
Polygon trace_outer_contour(const BinaryMask& mask);

struct DocumentQuad {
    Point2 top_left;
    Point2 top_right;
    Point2 bottom_right;
    Point2 bottom_left;

    std::array<Point2, 4> corners() const { return {top_left, top_right, bottom_right, bottom_left}; }
};

// Four ordered corners of the largest component. Throws DegenerateMask.
DocumentQuad extract_document_quad(const BinaryMask& mask, double epsilon);

// Same, with epsilon = fraction * contour perimeter.
DocumentQuad extract_document_quad_relative(const BinaryMask& mask, double epsilon_fraction);

struct ControlGrid {
    std::vector<Point2> source_points;  // on the distorted document
    std::vector<Point2> target_points;  // on the output rectangle
    int output_width = 0;
    int output_height = 0;
};

// 4 + 4k points: TL, k on the top arc, TR, k on the right arc, BR, k on the
// bottom arc, BL, k on the left arc. Points sit at equal arc length along the
// traced (unsimplified) contour. Throws InvalidArgument when a corner is more
// than 2 px from the contour.
ControlGrid boundary_control_points(const BinaryMask& mask, const DocumentQuad& corners, int k);

class TpsTransform {
public:
    // Fits f with f(src[i]) ~ dst[i]; kernel U(r) = r^2 log r^2 with
    // K + regularization * I. Throws SingularSystem on degenerate input.
    static TpsTransform fit(std::span<const Point2> src, std::span<const Point2> dst, double regularization);

    Point2 apply(Point2 p) const;

    const std::vector<Point2>& control_sources() const { return sources_; }
    // Rows are output x and y; columns are constant, x and y coefficients.
    const std::array<std::array<double, 3>, 2>& affine() const { return affine_; }
    const std::vector<Point2>& weights() const { return weights_; }
    double regularization() const { return regularization_; }

private:
    std::vector<Point2> sources_;
    std::array<std::array<double, 3>, 2> affine_{};
    std::vector<Point2> weights_;
    double regularization_ = 0.0;
};

inline TpsTransform tps_fit(std::span<const Point2> src, std::span<const Point2> dst, double regularization) {
    return TpsTransform::fit(src, dst, regularization);
}

double tps_kernel(double squared_radius);

// Backward warp: fits target -> source and resamples img on an
// output_width x output_height grid.
Raster tps_warp(const Raster& img, const ControlGrid& grid, double regularization);

// Even-odd scanline fill of the polygon through grid.source_points. Pixel
// centres on the boundary count as inside; zero-area polygons give an empty mask.
BinaryMask mask_from_control_grid(const ControlGrid& grid, int canvas_width, int canvas_height);

// Newton iteration for f(p) = target with a finite-difference Jacobian.
// Returns the best estimate after at most max_iters steps.
Point2 invert_map(const std::function<Point2(Point2)>& f, Point2 target, Point2 initial_guess,
                  int max_iters = 50, double tolerance = 1e-9);

// Solves A X = B for row-major A (n x n) and B (n x rhs) by Gaussian
// elimination with partial pivoting. Throws SingularSystem when a pivot
// falls below 1e-10 relative to max|A|.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int n, int rhs = 1);

}  // namespace marior
