#include "marior/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "marior/errors.hpp"

namespace marior {

namespace {

struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> v;

    double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

Plane luma_plane(const Raster& img) {
    const Raster g = to_grayscale(img);
    Plane p{g.width(), g.height(), std::vector<double>(g.data().begin(), g.data().end())};
    return p;
}

Plane downsample(const Plane& p) {
    Plane out{p.width / 2, p.height / 2, {}};
    out.v.resize(static_cast<std::size_t>(out.width) * out.height);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.v[static_cast<std::size_t>(y) * out.width + x] =
                0.25 * (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) + p.at(2 * x + 1, 2 * y + 1));
    return out;
}

std::vector<double> gaussian_taps(int window, double sigma) {
    std::vector<double> taps(static_cast<std::size_t>(window));
    const int half = window / 2;
    for (int i = 0; i < window; ++i) taps[i] = std::exp(-0.5 * (i - half) * (i - half) / (sigma * sigma));
    const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (double& t : taps) t /= sum;
    return taps;
}

// Separable filtering restricted to windows fully inside the plane.
Plane filter_valid(const Plane& p, const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    const int ow = p.width - k + 1;
    const int oh = p.height - k + 1;
    Plane rows{ow, p.height, std::vector<double>(static_cast<std::size_t>(ow) * p.height)};
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += taps[i] * p.at(x + i, y);
            rows.v[static_cast<std::size_t>(y) * ow + x] = s;
        }
    Plane out{ow, oh, std::vector<double>(static_cast<std::size_t>(ow) * oh)};
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += taps[i] * rows.at(x, y + i);
            out.v[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

// Separable smoothing with clamped borders; output has the input size.
Plane smooth_same(const Plane& p, double sigma) {
    const int half = static_cast<int>(std::ceil(3.0 * sigma));
    const std::vector<double> taps = gaussian_taps(2 * half + 1, sigma);
    Plane rows{p.width, p.height, std::vector<double>(p.v.size())};
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            double s = 0.0;
            for (int i = -half; i <= half; ++i) s += taps[i + half] * p.at(std::clamp(x + i, 0, p.width - 1), y);
            rows.v[static_cast<std::size_t>(y) * p.width + x] = s;
        }
    Plane out{p.width, p.height, std::vector<double>(p.v.size())};
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            double s = 0.0;
            for (int i = -half; i <= half; ++i) s += taps[i + half] * rows.at(x, std::clamp(y + i, 0, p.height - 1));
            out.v[static_cast<std::size_t>(y) * p.width + x] = s;
        }
    return out;
}

Plane product(const Plane& a, const Plane& b) {
    Plane out{a.width, a.height, std::vector<double>(a.v.size())};
    for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    return out;
}

struct ScaleTerms {
    double cs = 0.0;
    double ssim = 0.0;
};

ScaleTerms scale_terms(const Plane& a, const Plane& b, const std::vector<double>& taps, double c1, double c2) {
    const Plane mu_a = filter_valid(a, taps);
    const Plane mu_b = filter_valid(b, taps);
    const Plane aa = filter_valid(product(a, a), taps);
    const Plane bb = filter_valid(product(b, b), taps);
    const Plane ab = filter_valid(product(a, b), taps);
    double cs_sum = 0.0;
    double ssim_sum = 0.0;
    for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
        const double ma = mu_a.v[i];
        const double mb = mu_b.v[i];
        const double var_a = aa.v[i] - ma * ma;
        const double var_b = bb.v[i] - mb * mb;
        const double cov = ab.v[i] - ma * mb;
        const double cs = (2.0 * cov + c2) / (var_a + var_b + c2);
        const double lum = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        cs_sum += cs;
        ssim_sum += lum * cs;
    }
    const double n = static_cast<double>(mu_a.v.size());
    return {cs_sum / n, ssim_sum / n};
}

double signed_pow(double base, double exponent) {
    return base < 0.0 ? -std::pow(-base, exponent) : std::pow(base, exponent);
}

}  // namespace

double ms_ssim(const Raster& a, const Raster& b, const MsSsimParams& params) {
    if (a.width() != b.width() || a.height() != b.height()) throw DimensionMismatch("ms_ssim: image dimensions differ");
    if (params.window <= 0 || params.window % 2 == 0) throw InvalidArgument("ms_ssim: window must be odd");
    const int levels = static_cast<int>(params.scale_weights.size());
    const int min_dim = params.window << (levels - 1);
    if (std::min(a.width(), a.height()) < min_dim) throw InvalidArgument("ms_ssim: image too small for five scales");

    const auto taps = gaussian_taps(params.window, params.sigma);
    const double c1 = params.k1 * params.k1;
    const double c2 = params.k2 * params.k2;
    Plane pa = luma_plane(a);
    Plane pb = luma_plane(b);
    double result = 1.0;
    for (int level = 0; level < levels; ++level) {
        const ScaleTerms t = scale_terms(pa, pb, taps, c1, c2);
        const double term = level + 1 == levels ? t.ssim : t.cs;
        result *= signed_pow(term, params.scale_weights[level]);
        if (level + 1 < levels) {
            pa = downsample(pa);
            pb = downsample(pb);
        }
    }
    return result;
}

double local_distortion(const DisplacementFlow& correspondence) {
    const auto& v = correspondence.vectors();
    if (v.empty()) return 0.0;
    double sum = 0.0;
    for (const FlowVector& f : v) sum += std::hypot(f.du, f.dv);
    return sum / static_cast<double>(v.size());
}

namespace {

constexpr double kMatchSigma = 1.0;
// SSD values within this margin of the best one count as ties.
constexpr double kTieRelative = 0.05;
constexpr double kTieFloorPerPixel = 1e-3;

}  // namespace

DisplacementFlow estimate_dense_flow(const Raster& a, const Raster& b, int patch, int search) {
    if (a.width() != b.width() || a.height() != b.height())
        throw DimensionMismatch("estimate_dense_flow: image dimensions differ");
    if (patch <= 0 || search < 0) throw InvalidArgument("estimate_dense_flow: bad patch or search size");
    if (a.width() < patch || a.height() < patch) throw InvalidArgument("estimate_dense_flow: image smaller than patch");
    const Plane pa = smooth_same(luma_plane(a), kMatchSigma);
    const Plane pb = smooth_same(luma_plane(b), kMatchSigma);
    const int w = pa.width;
    const int h = pa.height;
    const int nx = w / patch;
    const int ny = h / patch;

    // Candidate offsets in tie-break order: magnitude, then dv, then du.
    struct Offset {
        int du, dv;
    };
    std::vector<Offset> offsets;
    for (int dv = -search; dv <= search; ++dv)
        for (int du = -search; du <= search; ++du) offsets.push_back({du, dv});
    std::stable_sort(offsets.begin(), offsets.end(), [](Offset l, Offset r) {
        const int ml = l.du * l.du + l.dv * l.dv;
        const int mr = r.du * r.du + r.dv * r.dv;
        if (ml != mr) return ml < mr;
        if (l.dv != r.dv) return l.dv < r.dv;
        return l.du < r.du;
    });

    std::vector<FlowVector> block(static_cast<std::size_t>(nx) * ny);
    std::vector<double> ssd(offsets.size());
    const double tie_floor = kTieFloorPerPixel * patch * patch;
    for (int by = 0; by < ny; ++by) {
        for (int bx = 0; bx < nx; ++bx) {
            const int x0 = bx * patch;
            const int y0 = by * patch;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < offsets.size(); ++k) {
                const Offset o = offsets[k];
                ssd[k] = std::numeric_limits<double>::infinity();
                if (x0 + o.du < 0 || y0 + o.dv < 0 || x0 + o.du + patch > w || y0 + o.dv + patch > h) continue;
                const double bound = best * (1.0 + kTieRelative) + tie_floor;
                double sum = 0.0;
                for (int y = 0; y < patch && sum <= bound; ++y) {
                    const double* ra = &pa.v[static_cast<std::size_t>(y0 + y) * w + x0];
                    const double* rb = &pb.v[static_cast<std::size_t>(y0 + y + o.dv) * w + x0 + o.du];
                    for (int x = 0; x < patch; ++x) {
                        const double d = ra[x] - rb[x];
                        sum += d * d;
                    }
                }
                ssd[k] = sum;
                best = std::min(best, sum);
            }
            // Near-ties go to the smallest displacement.
            const double limit = best * (1.0 + kTieRelative) + tie_floor;
            std::size_t pick = 0;
            while (!(ssd[pick] <= limit)) ++pick;
            block[static_cast<std::size_t>(by) * nx + bx] = {static_cast<double>(offsets[pick].du),
                                                             static_cast<double>(offsets[pick].dv)};
        }
    }

    // Interpolate between block centres.
    DisplacementFlow coarse(nx, ny);
    coarse.vectors() = std::move(block);
    DisplacementFlow field(w, h);
    const double centre = (patch - 1) / 2.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) field.at(x, y) = flow_at(coarse, (x - centre) / patch, (y - centre) / patch);
    return field;
}

std::size_t edit_distance(const std::u32string& a, const std::u32string& b) {
    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::u32string decode_utf8(std::string_view text) {
    std::u32string out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        int len = 0;
        char32_t cp = 0;
        if (c < 0x80) {
            len = 1;
            cp = c;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        }
        bool ok = len > 0 && i + len <= text.size();
        for (int k = 1; ok && k < len; ++k) {
            const auto cc = static_cast<unsigned char>(text[i + k]);
            if ((cc & 0xC0) != 0x80) ok = false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (!ok) {
            out.push_back(U'�');
            ++i;
            continue;
        }
        out.push_back(cp);
        i += static_cast<std::size_t>(len);
    }
    return out;
}

double cer(std::string_view recognized, std::string_view reference) {
    const std::u32string ref = decode_utf8(reference);
    if (ref.empty()) throw EmptyReference("cer: reference text is empty");
    const std::u32string rec = decode_utf8(recognized);
    return static_cast<double>(edit_distance(rec, ref)) / static_cast<double>(ref.size());
}

}  // namespace marior
