#include "marior/warpfield.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "marior/errors.hpp"

namespace marior {

DisplacementFlow::DisplacementFlow(int width, int height, FlowVector fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidArgument("DisplacementFlow: negative dimensions");
    vectors_.assign(static_cast<std::size_t>(width) * height, fill);
}

namespace {

void require_same_size(const DisplacementFlow& a, const DisplacementFlow& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height())
        throw DimensionMismatch(std::string(what) + ": flow dimensions differ");
}

}  // namespace

Raster sample(const Raster& img, const DisplacementFlow& flow) {
    if (img.width() != flow.width() || img.height() != flow.height())
        throw DimensionMismatch("sample: image and flow dimensions differ");
    Raster out(img.width(), img.height(), img.channels());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const FlowVector d = flow.at(x, y);
            const PixelValue v = bilinear_at(img, x + d.du, y + d.dv);
            for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = static_cast<float>(v[c]);
        }
    }
    return out;
}

FlowVector flow_at(const DisplacementFlow& flow, double x, double y) {
    const int w = flow.width();
    const int h = flow.height();
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = std::min(static_cast<int>(x), w - 1);
    const int y0 = std::min(static_cast<int>(y), h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const FlowVector a = flow.at(x0, y0), b = flow.at(x1, y0), c = flow.at(x0, y1), d = flow.at(x1, y1);
    return {(1 - fy) * ((1 - fx) * a.du + fx * b.du) + fy * ((1 - fx) * c.du + fx * d.du),
            (1 - fy) * ((1 - fx) * a.dv + fx * b.dv) + fy * ((1 - fx) * c.dv + fx * d.dv)};
}

DisplacementFlow accumulate_sum(const DisplacementFlow& cumulative, const DisplacementFlow& d_new) {
    require_same_size(cumulative, d_new, "accumulate_sum");
    DisplacementFlow out = cumulative;
    auto& v = out.vectors();
    const auto& add = d_new.vectors();
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i].du += add[i].du;
        v[i].dv += add[i].dv;
    }
    return out;
}

DisplacementFlow accumulate_compose(const DisplacementFlow& cumulative_prev, const DisplacementFlow& d_new) {
    require_same_size(cumulative_prev, d_new, "accumulate_compose");
    DisplacementFlow out(d_new.width(), d_new.height());
    for (int y = 0; y < d_new.height(); ++y) {
        for (int x = 0; x < d_new.width(); ++x) {
            const FlowVector d = d_new.at(x, y);
            const FlowVector c = flow_at(cumulative_prev, x + d.du, y + d.dv);
            out.at(x, y) = {d.du + c.du, d.dv + c.dv};
        }
    }
    return out;
}

FlowStats flow_stats(const DisplacementFlow& flow) {
    FlowStats stats;
    const auto& v = flow.vectors();
    if (v.empty()) return stats;
    const double count = 2.0 * static_cast<double>(v.size());
    double mean = 0.0;
    double magnitude = 0.0;
    for (const FlowVector& f : v) {
        mean += f.du + f.dv;
        magnitude += std::hypot(f.du, f.dv);
    }
    mean /= count;
    double var = 0.0;
    for (const FlowVector& f : v) var += (f.du - mean) * (f.du - mean) + (f.dv - mean) * (f.dv - mean);
    stats.variance = var / count;
    stats.mean_magnitude = magnitude / static_cast<double>(v.size());
    return stats;
}

DisplacementFlow scale_vectors(const DisplacementFlow& flow, double sx, double sy) {
    DisplacementFlow out = flow;
    for (FlowVector& f : out.vectors()) {
        f.du *= sx;
        f.dv *= sy;
    }
    return out;
}

namespace {

constexpr float kFlowMagic = 202021.25f;
constexpr std::int32_t kMaxFlowDimension = 1 << 16;

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
    static_assert(sizeof(T) == 4);
    std::uint32_t bits;
    std::memcpy(&bits, &value, 4);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xFFu));
}

template <typename T>
T get_le(const unsigned char* p) {
    static_assert(sizeof(T) == 4);
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    T value;
    std::memcpy(&value, &bits, 4);
    return value;
}

}  // namespace

DisplacementFlow read_flow(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (bytes.size() < 12) throw FormatError(path.string() + ": short flow header");
    if (get_le<float>(bytes.data()) != kFlowMagic) throw BadMagic(path.string() + ": bad flow magic");
    const std::int32_t w = get_le<std::int32_t>(bytes.data() + 4);
    const std::int32_t h = get_le<std::int32_t>(bytes.data() + 8);
    if (w < 0 || h < 0 || w > kMaxFlowDimension || h > kMaxFlowDimension)
        throw FormatError(path.string() + ": flow dimensions out of range");
    const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() < 12 + count * 8) throw FormatError(path.string() + ": short flow data");
    DisplacementFlow flow(w, h);
    auto& v = flow.vectors();
    const unsigned char* p = bytes.data() + 12;
    for (std::size_t i = 0; i < count; ++i, p += 8) {
        const float u = get_le<float>(p);
        const float d = get_le<float>(p + 4);
        if (!std::isfinite(u) || !std::isfinite(d)) throw FormatError(path.string() + ": non-finite flow vector");
        v[i] = {u, d};
    }
    return flow;
}

void write_flow(const DisplacementFlow& flow, const std::filesystem::path& path) {
    std::vector<unsigned char> bytes;
    bytes.reserve(12 + flow.vectors().size() * 8);
    put_le(bytes, kFlowMagic);
    put_le(bytes, static_cast<std::int32_t>(flow.width()));
    put_le(bytes, static_cast<std::int32_t>(flow.height()));
    for (const FlowVector& f : flow.vectors()) {
        put_le(bytes, static_cast<float>(f.du));
        put_le(bytes, static_cast<float>(f.dv));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace marior
