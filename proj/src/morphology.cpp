#include "marior/morphology.hpp"

#include <algorithm>
#include <utility>
#include <vector>

namespace marior {

BinaryMask largest_component(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    std::vector<int> label(static_cast<std::size_t>(w) * h, 0);
    std::vector<int> stack;
    int best_label = 0;
    std::size_t best_size = 0;
    int next = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int idx = y * w + x;
            if (!mask.at(x, y) || label[idx] != 0) continue;
            ++next;
            std::size_t size = 0;
            label[idx] = next;
            stack.push_back(idx);
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                ++size;
                const int cx = cur % w;
                const int cy = cur / w;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx;
                        const int ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        const int nidx = ny * w + nx;
                        if (mask.at(nx, ny) && label[nidx] == 0) {
                            label[nidx] = next;
                            stack.push_back(nidx);
                        }
                    }
                }
            }
            if (size > best_size) {
                best_size = size;
                best_label = next;
            }
        }
    }
    BinaryMask out(w, h);
    if (best_label == 0) return out;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.set(x, y, label[y * w + x] == best_label);
    return out;
}

BinaryMask fill_holes(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    BinaryMask outside(w, h);
    std::vector<std::pair<int, int>> stack;
    auto seed = [&](int x, int y) {
        if (!mask.at(x, y) && !outside.at(x, y)) {
            outside.set(x, y, true);
            stack.emplace_back(x, y);
        }
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    constexpr int dx4[] = {1, -1, 0, 0};
    constexpr int dy4[] = {0, 0, 1, -1};
    while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        for (int k = 0; k < 4; ++k) {
            const int nx = x + dx4[k];
            const int ny = y + dy4[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            seed(nx, ny);
        }
    }
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.set(x, y, !outside.at(x, y));
    return out;
}

namespace {

std::vector<std::pair<int, int>> disk(int radius) {
    std::vector<std::pair<int, int>> offsets;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) offsets.emplace_back(dx, dy);
    return offsets;
}

BinaryMask morph(const BinaryMask& mask, int radius, bool dilating) {
    const int w = mask.width();
    const int h = mask.height();
    if (radius <= 0 || w == 0 || h == 0) return mask;
    const auto offsets = disk(radius);
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool v = !dilating;
            for (const auto& [dx, dy] : offsets) {
                const bool s = mask.at(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1));
                if (dilating && s) {
                    v = true;
                    break;
                }
                if (!dilating && !s) {
                    v = false;
                    break;
                }
            }
            out.set(x, y, v);
        }
    }
    return out;
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, int radius) { return morph(mask, radius, true); }
BinaryMask erode(const BinaryMask& mask, int radius) { return morph(mask, radius, false); }
BinaryMask close(const BinaryMask& mask, int radius) { return erode(dilate(mask, radius), radius); }

BinaryMask inner_boundary(const BinaryMask& mask) {
    BinaryMask out(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) continue;
            const bool edge = !mask.get_or_false(x + 1, y) || !mask.get_or_false(x - 1, y) ||
                              !mask.get_or_false(x, y + 1) || !mask.get_or_false(x, y - 1);
            out.set(x, y, edge);
        }
    }
    return out;
}

}  // namespace marior
