#include "marior/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "marior/errors.hpp"
#include "marior/morphology.hpp"

namespace marior {

double signed_area(std::span<const Point2> polygon) {
    const std::size_t n = polygon.size();
    if (n < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = polygon[i];
        const Point2 b = polygon[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

double perimeter(std::span<const Point2> polygon, Closure closure) {
    const std::size_t n = polygon.size();
    if (n < 2) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) total += distance(polygon[i], polygon[i + 1]);
    if (closure == Closure::Closed) total += distance(polygon[n - 1], polygon[0]);
    return total;
}

double segment_distance(Point2 p, Point2 a, Point2 b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) return distance(p, a);
    const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

namespace {

Polygon simplify_chain(std::span<const Point2> pts, double epsilon) {
    const std::size_t n = pts.size();
    if (n <= 2) return {pts.begin(), pts.end()};
    std::vector<bool> keep(n, false);
    keep.front() = keep.back() = true;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
    while (!stack.empty()) {
        const auto [first, last] = stack.back();
        stack.pop_back();
        if (last <= first + 1) continue;
        double dmax = -1.0;
        std::size_t split = first;
        for (std::size_t i = first + 1; i < last; ++i) {
            const double d = segment_distance(pts[i], pts[first], pts[last]);
            if (d > dmax) {
                dmax = d;
                split = i;
            }
        }
        if (dmax >= epsilon) {
            keep[split] = true;
            stack.emplace_back(first, split);
            stack.emplace_back(split, last);
        }
    }
    Polygon out;
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) out.push_back(pts[i]);
    return out;
}

}  // namespace

Polygon simplify_polygon(std::span<const Point2> points, double epsilon, Closure closure) {
    if (points.empty()) throw InvalidArgument("simplify_polygon: empty input");
    if (epsilon < 0.0) throw InvalidArgument("simplify_polygon: negative epsilon");
    if (closure == Closure::Open || points.size() < 3) return simplify_chain(points, epsilon);

    const std::size_t n = points.size();
    std::size_t ia = 0, ib = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = points[i].x - points[j].x;
            const double dy = points[i].y - points[j].y;
            const double d2 = dx * dx + dy * dy;
            if (d2 > best) {
                best = d2;
                ia = i;
                ib = j;
            }
        }
    }
    Polygon first(points.begin() + static_cast<std::ptrdiff_t>(ia), points.begin() + static_cast<std::ptrdiff_t>(ib) + 1);
    Polygon second(points.begin() + static_cast<std::ptrdiff_t>(ib), points.end());
    second.insert(second.end(), points.begin(), points.begin() + static_cast<std::ptrdiff_t>(ia) + 1);

    Polygon out = simplify_chain(first, epsilon);
    const Polygon tail = simplify_chain(second, epsilon);
    out.insert(out.end(), tail.begin() + 1, tail.end() - 1);
    return out;
}

Polygon trace_outer_contour(const BinaryMask& mask) {
    const BinaryMask comp = largest_component(mask);
    const int w = comp.width();
    const int h = comp.height();
    int sx = -1, sy = -1;
    for (int y = 0; y < h && sx < 0; ++y)
        for (int x = 0; x < w; ++x)
            if (comp.at(x, y)) {
                sx = x;
                sy = y;
                break;
            }
    if (sx < 0) return {};

    // Clockwise on screen, starting west.
    constexpr int dx8[] = {-1, -1, 0, 1, 1, 1, 0, -1};
    constexpr int dy8[] = {0, -1, -1, -1, 0, 1, 1, 1};
    auto direction_of = [&](int fx, int fy, int tx, int ty) {
        for (int d = 0; d < 8; ++d)
            if (fx + dx8[d] == tx && fy + dy8[d] == ty) return d;
        return 0;
    };

    Polygon contour{{static_cast<double>(sx), static_cast<double>(sy)}};
    int px = sx, py = sy;
    int bx = sx - 1, by = sy;  // backtrack: always a background cell
    int first_x = -1, first_y = -1;
    const std::size_t limit = 4 * static_cast<std::size_t>(w) * h + 8;
    for (std::size_t step = 0; step < limit; ++step) {
        const int start = direction_of(px, py, bx, by);
        int nx = -1, ny = -1;
        int prev_x = bx, prev_y = by;
        for (int i = 1; i <= 8; ++i) {
            const int d = (start + i) % 8;
            const int cx = px + dx8[d];
            const int cy = py + dy8[d];
            if (comp.get_or_false(cx, cy)) {
                nx = cx;
                ny = cy;
                break;
            }
            prev_x = cx;
            prev_y = cy;
        }
        if (nx < 0) break;  // isolated pixel
        if (px == sx && py == sy) {
            if (first_x < 0) {
                first_x = nx;
                first_y = ny;
            } else if (nx == first_x && ny == first_y) {
                break;
            }
        }
        bx = prev_x;
        by = prev_y;
        px = nx;
        py = ny;
        if (px == sx && py == sy) continue;
        contour.push_back({static_cast<double>(px), static_cast<double>(py)});
    }
    if (signed_area(contour) < 0.0) std::reverse(contour.begin(), contour.end());
    return contour;
}

namespace {

double triangle_area(Point2 a, Point2 b, Point2 c) {
    return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

// TL = min(x + y), ties to smaller y then smaller x.
bool precedes_as_top_left(Point2 a, Point2 b) {
    const double sa = a.x + a.y;
    const double sb = b.x + b.y;
    if (sa != sb) return sa < sb;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
}

DocumentQuad quad_from_contour(const Polygon& contour, std::size_t area, double epsilon) {
    if (area < 64) throw DegenerateMask("document component smaller than 64 px");
    Polygon poly = simplify_polygon(contour, epsilon, Closure::Closed);
    poly.erase(std::unique(poly.begin(), poly.end()), poly.end());
    while (poly.size() > 1 && poly.front() == poly.back()) poly.pop_back();
    if (poly.size() < 4) throw DegenerateMask("fewer than 4 distinct corner candidates");
    while (poly.size() > 4) {
        const std::size_t n = poly.size();
        std::size_t victim = 0;
        double smallest = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double a = triangle_area(poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]);
            if (a < smallest) {
                smallest = a;
                victim = i;
            }
        }
        poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(victim));
    }
    if (signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
    if (std::abs(signed_area(poly)) < 1.0) throw DegenerateMask("corner quadrilateral has no area");
    const auto tl = std::min_element(poly.begin(), poly.end(), precedes_as_top_left);
    std::rotate(poly.begin(), tl, poly.end());
    return {poly[0], poly[1], poly[2], poly[3]};
}

}  // namespace

DocumentQuad extract_document_quad(const BinaryMask& mask, double epsilon) {
    const BinaryMask comp = largest_component(mask);
    return quad_from_contour(trace_outer_contour(comp), comp.count(), epsilon);
}

DocumentQuad extract_document_quad_relative(const BinaryMask& mask, double epsilon_fraction) {
    const BinaryMask comp = largest_component(mask);
    const Polygon contour = trace_outer_contour(comp);
    return quad_from_contour(contour, comp.count(), epsilon_fraction * perimeter(contour));
}

ControlGrid boundary_control_points(const BinaryMask& mask, const DocumentQuad& corners, int k) {
    if (k < 0) throw InvalidArgument("boundary_control_points: negative point count");
    const Polygon contour = trace_outer_contour(mask);
    const std::size_t n = contour.size();
    if (n < 4) throw InvalidArgument("boundary_control_points: contour too short");

    // cumulative[i] = arc length from contour[0] to contour[i]; total closes the loop.
    std::vector<double> cumulative(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) cumulative[i + 1] = cumulative[i] + distance(contour[i], contour[(i + 1) % n]);
    const double total = cumulative[n];

    const auto quad = corners.corners();
    std::array<std::size_t, 4> at{};
    for (int c = 0; c < 4; ++c) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double d = distance(contour[i], quad[c]);
            if (d < best) {
                best = d;
                at[c] = i;
            }
        }
        if (best > 2.0) throw InvalidArgument("boundary_control_points: corner not on contour");
    }

    std::array<double, 4> arc{};
    for (int c = 0; c < 4; ++c) {
        double len = cumulative[at[(c + 1) % 4]] - cumulative[at[c]];
        if (len < 0.0) len += total;
        arc[c] = len;
    }
    const double arc_sum = arc[0] + arc[1] + arc[2] + arc[3];
    if (std::abs(arc_sum - total) > 1e-6 * std::max(1.0, total))
        throw InvalidArgument("boundary_control_points: corners are not in contour order");

    auto point_at = [&](double s) {
        s = std::fmod(s, total);
        if (s < 0.0) s += total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
        const std::size_t seg = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cumulative.begin() - 1, 0, static_cast<std::ptrdiff_t>(n) - 1));
        const double seg_len = cumulative[seg + 1] - cumulative[seg];
        const double t = seg_len > 0.0 ? (s - cumulative[seg]) / seg_len : 0.0;
        const Point2 a = contour[seg];
        const Point2 b = contour[(seg + 1) % n];
        return Point2{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    };

    ControlGrid grid;
    const double mean_w = 0.5 * (arc[0] + arc[2]);
    const double mean_h = 0.5 * (arc[1] + arc[3]);
    grid.output_width = std::clamp(static_cast<int>(std::lround(mean_w)), 64, 4096);
    grid.output_height = std::clamp(static_cast<int>(std::lround(mean_h)), 64, 4096);
    const double wmax = grid.output_width - 1.0;
    const double hmax = grid.output_height - 1.0;
    const std::array<Point2, 4> rect{Point2{0.0, 0.0}, Point2{wmax, 0.0}, Point2{wmax, hmax}, Point2{0.0, hmax}};

    for (int c = 0; c < 4; ++c) {
        grid.source_points.push_back(contour[at[c]]);
        grid.target_points.push_back(rect[c]);
        const Point2 r0 = rect[c];
        const Point2 r1 = rect[(c + 1) % 4];
        for (int j = 1; j <= k; ++j) {
            const double f = static_cast<double>(j) / (k + 1);
            grid.source_points.push_back(point_at(cumulative[at[c]] + f * arc[c]));
            grid.target_points.push_back({r0.x + f * (r1.x - r0.x), r0.y + f * (r1.y - r0.y)});
        }
    }
    return grid;
}

double tps_kernel(double r2) { return r2 > 0.0 ? r2 * std::log(r2) : 0.0; }

std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int n, int rhs) {
    const std::size_t un = static_cast<std::size_t>(n);
    const std::size_t ur = static_cast<std::size_t>(rhs);
    if (a.size() != un * un || b.size() != un * ur) throw InvalidArgument("solve_dense: size mismatch");
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    const double tiny = 1e-10 * scale;
    for (std::size_t col = 0; col < un; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < un; ++r)
            if (std::abs(a[r * un + col]) > std::abs(a[pivot * un + col])) pivot = r;
        if (!(std::abs(a[pivot * un + col]) >= tiny) || scale == 0.0) throw SingularSystem("linear system is singular");
        if (pivot != col) {
            for (std::size_t c = 0; c < un; ++c) std::swap(a[col * un + c], a[pivot * un + c]);
            for (std::size_t c = 0; c < ur; ++c) std::swap(b[col * ur + c], b[pivot * ur + c]);
        }
        const double p = a[col * un + col];
        for (std::size_t r = col + 1; r < un; ++r) {
            const double f = a[r * un + col] / p;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < un; ++c) a[r * un + c] -= f * a[col * un + c];
            for (std::size_t c = 0; c < ur; ++c) b[r * ur + c] -= f * b[col * ur + c];
        }
    }
    for (std::size_t row = un; row-- > 0;) {
        for (std::size_t c = 0; c < ur; ++c) {
            double s = b[row * ur + c];
            for (std::size_t k = row + 1; k < un; ++k) s -= a[row * un + k] * b[k * ur + c];
            b[row * ur + c] = s / a[row * un + row];
        }
    }
    return b;
}

// The system is assembled on centred, unit-RMS coordinates u = s (x - c) for
// conditioning, with regularization s^2 * lambda. Since
// U(s^2 r^2) = s^2 U(r^2) + s^2 log(s^2) r^2 and the side conditions remove
// the r^2 term up to a constant, the result maps back exactly.
TpsTransform TpsTransform::fit(std::span<const Point2> src, std::span<const Point2> dst, double regularization) {
    if (src.size() != dst.size()) throw DimensionMismatch("tps_fit: point lists differ in length");
    if (src.size() < 3) throw InvalidArgument("tps_fit: need at least 3 point pairs");
    if (!(regularization >= 0.0)) throw InvalidArgument("tps_fit: negative regularization");
    const int n = static_cast<int>(src.size());
    const int m = n + 3;

    Point2 centre{0.0, 0.0};
    for (const Point2& p : src) centre = centre + p;
    centre = (1.0 / n) * centre;
    double spread = 0.0;
    for (const Point2& p : src) {
        const Point2 d = p - centre;
        spread += d.x * d.x + d.y * d.y;
    }
    spread = std::sqrt(spread / n);
    if (!(spread > 0.0)) throw SingularSystem("tps_fit: control points coincide");
    const double s = 1.0 / spread;

    std::vector<Point2> u(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) u[i] = s * (src[i] - centre);

    std::vector<double> a(static_cast<std::size_t>(m) * m, 0.0);
    std::vector<double> b(static_cast<std::size_t>(m) * 2, 0.0);
    auto A = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * m + c]; };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double dx = u[i].x - u[j].x;
            const double dy = u[i].y - u[j].y;
            A(i, j) = tps_kernel(dx * dx + dy * dy);
        }
        A(i, i) += regularization * s * s;
        A(i, n) = A(n, i) = 1.0;
        A(i, n + 1) = A(n + 1, i) = u[i].x;
        A(i, n + 2) = A(n + 2, i) = u[i].y;
        b[static_cast<std::size_t>(i) * 2] = dst[i].x;
        b[static_cast<std::size_t>(i) * 2 + 1] = dst[i].y;
    }
    const std::vector<double> sol = solve_dense(std::move(a), std::move(b), m, 2);

    TpsTransform t;
    t.sources_.assign(src.begin(), src.end());
    t.regularization_ = regularization;
    t.weights_.resize(src.size());
    const double log_s2 = std::log(s * s);
    for (int out = 0; out < 2; ++out) {
        double quad = 0.0;
        for (int i = 0; i < n; ++i) {
            const double w = sol[static_cast<std::size_t>(i) * 2 + out];
            const Point2 d = src[i] - centre;
            quad += w * (d.x * d.x + d.y * d.y);
            (out == 0 ? t.weights_[i].x : t.weights_[i].y) = s * s * w;
        }
        const double a0 = sol[static_cast<std::size_t>(n) * 2 + out];
        const double ax = sol[static_cast<std::size_t>(n + 1) * 2 + out];
        const double ay = sol[static_cast<std::size_t>(n + 2) * 2 + out];
        t.affine_[out][0] = a0 - s * (ax * centre.x + ay * centre.y) + s * s * log_s2 * quad;
        t.affine_[out][1] = s * ax;
        t.affine_[out][2] = s * ay;
    }
    return t;
}

Point2 TpsTransform::apply(Point2 p) const {
    Point2 out{affine_[0][0] + affine_[0][1] * p.x + affine_[0][2] * p.y,
               affine_[1][0] + affine_[1][1] * p.x + affine_[1][2] * p.y};
    for (std::size_t i = 0; i < sources_.size(); ++i) {
        const double dx = p.x - sources_[i].x;
        const double dy = p.y - sources_[i].y;
        const double u = tps_kernel(dx * dx + dy * dy);
        out.x += weights_[i].x * u;
        out.y += weights_[i].y * u;
    }
    return out;
}

Raster tps_warp(const Raster& img, const ControlGrid& grid, double regularization) {
    if (grid.output_width <= 0 || grid.output_height <= 0) throw InvalidArgument("tps_warp: empty output size");
    const TpsTransform backward = TpsTransform::fit(grid.target_points, grid.source_points, regularization);
    Raster out(grid.output_width, grid.output_height, img.channels());
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            const Point2 src = backward.apply({static_cast<double>(x), static_cast<double>(y)});
            const PixelValue v = bilinear_at(img, src.x, src.y);
            for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = static_cast<float>(v[c]);
        }
    }
    return out;
}

BinaryMask mask_from_control_grid(const ControlGrid& grid, int canvas_width, int canvas_height) {
    BinaryMask out(canvas_width, canvas_height);
    const auto& poly = grid.source_points;
    const std::size_t n = poly.size();
    if (n < 3 || std::abs(signed_area(poly)) < 1e-9) return out;
    constexpr double slack = 1e-9;
    auto fill_span = [&](int y, double x0, double x1) {
        const int lo = std::max(0, static_cast<int>(std::ceil(x0 - slack)));
        const int hi = std::min(canvas_width - 1, static_cast<int>(std::floor(x1 + slack)));
        for (int x = lo; x <= hi; ++x) out.set(x, y, true);
    };
    std::vector<double> crossings;
    for (int y = 0; y < canvas_height; ++y) {
        const double yc = y;
        crossings.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 a = poly[i];
            const Point2 b = poly[(i + 1) % n];
            if (a.y == b.y) {
                if (a.y == yc) fill_span(y, std::min(a.x, b.x), std::max(a.x, b.x));
                continue;
            }
            const double ylo = std::min(a.y, b.y);
            const double yhi = std::max(a.y, b.y);
            if (yc < ylo || yc >= yhi) continue;
            crossings.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
        }
        std::sort(crossings.begin(), crossings.end());
        for (std::size_t i = 0; i + 1 < crossings.size(); i += 2) fill_span(y, crossings[i], crossings[i + 1]);
    }
    for (const Point2& p : poly) {
        const double rx = std::round(p.x);
        const double ry = std::round(p.y);
        if (rx == p.x && ry == p.y && rx >= 0 && ry >= 0 && rx < canvas_width && ry < canvas_height)
            out.set(static_cast<int>(rx), static_cast<int>(ry), true);
    }
    return out;
}

Point2 invert_map(const std::function<Point2(Point2)>& f, Point2 target, Point2 guess, int max_iters,
                  double tolerance) {
    constexpr double h = 1e-4;
    Point2 p = guess;
    for (int it = 0; it < max_iters; ++it) {
        const Point2 r = f(p) - target;
        if (std::hypot(r.x, r.y) <= tolerance) break;
        const Point2 fx1 = f({p.x + h, p.y});
        const Point2 fx0 = f({p.x - h, p.y});
        const Point2 fy1 = f({p.x, p.y + h});
        const Point2 fy0 = f({p.x, p.y - h});
        const double j00 = (fx1.x - fx0.x) / (2 * h);
        const double j10 = (fx1.y - fx0.y) / (2 * h);
        const double j01 = (fy1.x - fy0.x) / (2 * h);
        const double j11 = (fy1.y - fy0.y) / (2 * h);
        const double det = j00 * j11 - j01 * j10;
        if (std::abs(det) < 1e-14) break;
        p.x -= (j11 * r.x - j01 * r.y) / det;
        p.y -= (-j10 * r.x + j00 * r.y) / det;
    }
    return p;
}

}  // namespace marior
