#include "marior/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include <png.h>

#include "marior/errors.hpp"

namespace marior {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

Raster::Raster(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0) throw InvalidArgument("Raster: negative dimensions");
    if (channels != 1 && channels != 3) throw InvalidArgument("Raster: channels must be 1 or 3");
    data_.assign(static_cast<std::size_t>(width) * height * channels, std::clamp(fill, 0.0f, 1.0f));
}

Raster Raster::from_data(int width, int height, int channels, std::vector<float> data) {
    Raster r(width, height, channels);
    if (data.size() != r.data_.size()) throw InvalidArgument("Raster: data length does not match dimensions");
    for (float& v : data) {
        if (!std::isfinite(v)) throw InvalidArgument("Raster: non-finite sample");
        v = std::clamp(v, 0.0f, 1.0f);
    }
    r.data_ = std::move(data);
    return r;
}

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidArgument("BinaryMask: negative dimensions");
    bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

PixelValue bilinear_at(const Raster& img, double x, double y) {
    PixelValue out{0.0, 0.0, 0.0};
    const int w = img.width();
    const int h = img.height();
    if (w == 0 || h == 0) return out;
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = std::min(static_cast<int>(x), w - 1);
    const int y0 = std::min(static_cast<int>(y), h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    for (int c = 0; c < img.channels(); ++c) {
        const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
        const double bottom = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
        out[c] = (1.0 - fy) * top + fy * bottom;
    }
    return out;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    if (a.width() != b.width() || a.height() != b.height()) throw DimensionMismatch("iou: mask dimensions differ");
    std::size_t inter = 0;
    std::size_t uni = 0;
    const auto& ab = a.bits();
    const auto& bb = b.bits();
    for (std::size_t i = 0; i < ab.size(); ++i) {
        inter += (ab[i] && bb[i]) ? 1 : 0;
        uni += (ab[i] || bb[i]) ? 1 : 0;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

Raster to_grayscale(const Raster& img) {
    if (img.channels() == 1) return img;
    Raster out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out.at(x, y) = static_cast<float>(0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                                              0.114 * img.at(x, y, 2));
    return out;
}

Raster mask_to_raster(const BinaryMask& mask) {
    Raster out(mask.width(), mask.height(), 1);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) out.at(x, y) = mask.at(x, y) ? 1.0f : 0.0f;
    return out;
}

namespace {

std::uint8_t quantize(float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Raster read_png(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw FormatError(path.string() + ": " + image.message);
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = color ? 3 : 1;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw FormatError(path.string() + ": " + image.message);
    }
    std::vector<float> data(buffer.size());
    std::transform(buffer.begin(), buffer.end(), data.begin(), [](png_byte b) { return b / 255.0f; });
    return Raster::from_data(static_cast<int>(image.width), static_cast<int>(image.height), channels,
                             std::move(data));
}

void write_png(const Raster& img, const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<png_byte> buffer(img.data().size());
    std::transform(img.data().begin(), img.data().end(), buffer.begin(), quantize);
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr))
        throw IoError(path.string() + ": " + image.message);
}

// Parses the P5/P6 header; returns the offset of the first sample byte.
std::size_t parse_pnm_header(const std::vector<unsigned char>& bytes, const std::string& name, int& channels,
                             int& width, int& height, int& maxval) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw FormatError(name + ": not a binary PGM/PPM file");
    channels = bytes[1] == '6' ? 3 : 1;
    std::size_t pos = 2;
    int fields[3] = {0, 0, 0};
    for (int& field : fields) {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw FormatError(name + ": malformed header");
        long value = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos] - '0');
            if (value > (1 << 20)) throw FormatError(name + ": header value out of range");
            ++pos;
        }
        field = static_cast<int>(value);
    }
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError(name + ": malformed header");
    ++pos;
    width = fields[0];
    height = fields[1];
    maxval = fields[2];
    if (width <= 0 || height <= 0) throw FormatError(name + ": bad dimensions");
    if (maxval <= 0 || maxval > 255) throw FormatError(name + ": only 8-bit samples are supported");
    return pos;
}

Raster read_pnm(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    int channels = 1, width = 0, height = 0, maxval = 255;
    const std::size_t offset = parse_pnm_header(bytes, path.string(), channels, width, height, maxval);
    const std::size_t n = static_cast<std::size_t>(width) * height * channels;
    if (bytes.size() < offset + n) throw FormatError(path.string() + ": truncated sample data");
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<float>(bytes[offset + i]) / static_cast<float>(maxval);
    return Raster::from_data(width, height, channels, std::move(data));
}

void write_pnm(const Raster& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << (img.channels() == 3 ? "P6" : "P5") << '\n' << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<char> buffer(img.data().size());
    std::transform(img.data().begin(), img.data().end(), buffer.begin(),
                   [](float v) { return static_cast<char>(quantize(v)); });
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

Raster read_image(const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") return read_png(path);
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
    throw FormatError("unsupported image format: " + path.string());
}

void write_image(const Raster& img, const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") return write_png(img, path);
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
        if (ext == ".pgm" && img.channels() != 1) throw InvalidArgument("PGM requires a single-channel image");
        if (ext == ".ppm" && img.channels() != 3) throw InvalidArgument("PPM requires a 3-channel image");
        return write_pnm(img, path);
    }
    throw FormatError("unsupported image format: " + path.string());
}

BinaryMask read_mask(const std::filesystem::path& path) {
    const Raster r = to_grayscale(read_image(path));
    BinaryMask mask(r.width(), r.height());
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x) mask.set(x, y, r.at(x, y) >= 128.0f / 255.0f);
    return mask;
}

void write_mask(const BinaryMask& mask, const std::filesystem::path& path) {
    write_image(mask_to_raster(mask), path);
}

}  // namespace marior
