#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace marior {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
    friend bool operator==(Point2 a, Point2 b) = default;
};

double distance(Point2 a, Point2 b);

// Row-major image with 1 or 3 channels; samples live in [0,1].
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, int channels, float fill = 0.0f);

    // Takes ownership of `data`, clamping samples into [0,1]. Throws
    // InvalidArgument on a size mismatch or non-finite samples.
    static Raster from_data(int width, int height, int channels, std::vector<float> data);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }

    float at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
    float& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }

    const std::vector<float>& data() const { return data_; }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<float> data_;
};

class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false);

    int width() const { return width_; }
    int height() const { return height_; }

    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

    // Out-of-range coordinates read as background.
    bool get_or_false(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_ && at(x, y);
    }

    std::size_t count() const;
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

// Up to three channel values; only the first img.channels() are meaningful.
using PixelValue = std::array<double, 3>;

// Bilinear interpolation with clamp-to-edge outside [0,w-1]x[0,h-1].
PixelValue bilinear_at(const Raster& img, double x, double y);

// Intersection over union. Two empty masks score 1.0.
double iou(const BinaryMask& a, const BinaryMask& b);

// Luma (0.299, 0.587, 0.114) for 3-channel input; copies 1-channel input.
Raster to_grayscale(const Raster& img);

// PNG (by extension .png) or binary PGM/PPM (P5/P6). Samples are value/maxval.
Raster read_image(const std::filesystem::path& path);
void write_image(const Raster& img, const std::filesystem::path& path);

// Masks are 8-bit PGM: 0 = background, 255 = document. Reading thresholds at 128.
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);

Raster mask_to_raster(const BinaryMask& mask);

}  // namespace marior
