#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "marior/raster.hpp"
#include "marior/rng.hpp"
#include "marior/warpfield.hpp"

namespace testing {

inline marior::Raster random_raster(int w, int h, int channels, std::uint64_t seed) {
    marior::SplitMix64 rng(seed);
    std::vector<float> data(static_cast<std::size_t>(w) * h * channels);
    for (float& v : data) v = static_cast<float>(rng.uniform());
    return marior::Raster::from_data(w, h, channels, std::move(data));
}

// Sum of a few sinusoids; smooth enough for interpolation-error bounds.
inline marior::Raster smooth_raster(int w, int h, std::uint64_t seed) {
    marior::SplitMix64 rng(seed);
    const double fx = rng.uniform(0.02, 0.06), fy = rng.uniform(0.02, 0.06), ph = rng.uniform(0.0, 6.0);
    marior::Raster r(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            r.at(x, y) = static_cast<float>(0.5 + 0.25 * std::sin(fx * x + ph) + 0.2 * std::cos(fy * y - ph));
    return r;
}

inline marior::DisplacementFlow random_flow(int w, int h, double amplitude, std::uint64_t seed) {
    marior::SplitMix64 rng(seed);
    marior::DisplacementFlow f(w, h);
    for (auto& v : f.vectors()) v = {rng.uniform(-amplitude, amplitude), rng.uniform(-amplitude, amplitude)};
    return f;
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("marior-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::vector<char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace testing
