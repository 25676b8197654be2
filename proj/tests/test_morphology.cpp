#include "marior/morphology.hpp"

#include "doctest.h"
#include "support.hpp"

#include <algorithm>
#include <deque>

using namespace marior;

namespace {

BinaryMask random_mask(int w, int h, double p, std::uint64_t seed) {
    SplitMix64 rng(seed);
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.set(x, y, rng.uniform() < p);
    return m;
}

// Breadth-first labelling, 8-connected; returns the biggest label's pixels,
// earliest-seeded on ties.
BinaryMask reference_largest(const BinaryMask& m) {
    const int w = m.width(), h = m.height();
    std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<std::size_t> sizes;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!m.at(x, y) || label[y * w + x] >= 0) continue;
            const int id = static_cast<int>(sizes.size());
            sizes.push_back(0);
            std::deque<std::pair<int, int>> queue{{x, y}};
            label[y * w + x] = id;
            while (!queue.empty()) {
                auto [cx, cy] = queue.front();
                queue.pop_front();
                ++sizes[id];
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (!m.get_or_false(nx, ny) || label[ny * w + nx] >= 0) continue;
                        label[ny * w + nx] = id;
                        queue.push_back({nx, ny});
                    }
            }
        }
    BinaryMask out(w, h);
    if (sizes.empty()) return out;
    const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.set(x, y, label[y * w + x] == best);
    return out;
}

bool disk_hit(const BinaryMask& m, int x, int y, int r, bool want) {
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            if (dx * dx + dy * dy > r * r) continue;
            const int cx = std::clamp(x + dx, 0, m.width() - 1);
            const int cy = std::clamp(y + dy, 0, m.height() - 1);
            if (m.at(cx, cy) == want) return true;
        }
    return false;
}

}  // namespace

TEST_CASE("largest component matches a flood-fill reference") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const BinaryMask m = random_mask(23, 19, 0.45, seed);
        CHECK(largest_component(m) == reference_largest(m));
    }
    CHECK(largest_component(BinaryMask(5, 5)).count() == 0u);
}

TEST_CASE("largest component drops speckles") {
    BinaryMask m(40, 40);
    for (int y = 10; y < 30; ++y)
        for (int x = 10; x < 30; ++x) m.set(x, y, true);
    for (int i = 0; i < 5; ++i) m.set(2 + 7 * i, 2, true);
    const BinaryMask big = largest_component(m);
    CHECK(big.count() == 400u);
    CHECK_FALSE(big.at(2, 2));
}

TEST_CASE("diagonal neighbours are connected") {
    BinaryMask m(4, 4);
    m.set(0, 0, true);
    m.set(1, 1, true);
    m.set(2, 2, true);
    m.set(3, 0, true);
    CHECK(largest_component(m).count() == 3u);
}

TEST_CASE("fill_holes closes interior holes only") {
    BinaryMask m(12, 12);
    for (int y = 2; y < 10; ++y)
        for (int x = 2; x < 10; ++x) m.set(x, y, true);
    m.set(5, 5, false);
    m.set(6, 5, false);
    m.set(2, 6, false);  // notch open to the outside
    const BinaryMask f = fill_holes(m);
    CHECK(f.at(5, 5));
    CHECK(f.at(6, 5));
    CHECK_FALSE(f.at(2, 6));
    CHECK(f.count() == m.count() + 2);
}

TEST_CASE("dilate and erode match brute force with clamped borders") {
    for (int r : {1, 2, 3}) {
        const BinaryMask m = random_mask(15, 13, 0.3, 40 + r);
        const BinaryMask d = dilate(m, r), e = erode(m, r);
        for (int y = 0; y < 13; ++y)
            for (int x = 0; x < 15; ++x) {
                CHECK(d.at(x, y) == disk_hit(m, x, y, r, true));
                CHECK(e.at(x, y) == !disk_hit(m, x, y, r, false));
            }
        CHECK(close(m, r) == erode(dilate(m, r), r));
    }
}

TEST_CASE("inner boundary of a filled square") {
    BinaryMask m(10, 10);
    for (int y = 2; y < 8; ++y)
        for (int x = 2; x < 8; ++x) m.set(x, y, true);
    const BinaryMask b = inner_boundary(m);
    CHECK(b.count() == 20u);
    CHECK(b.at(2, 2));
    CHECK_FALSE(b.at(4, 4));

    const BinaryMask full(3, 3, true);
    CHECK(inner_boundary(full).count() == 8u);
}
