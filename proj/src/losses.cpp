#include "marior/losses.hpp"

#include <algorithm>
#include <cmath>

#include "marior/errors.hpp"

namespace marior {

SoftMask::SoftMask(int width, int height, double fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidArgument("SoftMask: negative dimensions");
    values_.assign(static_cast<std::size_t>(width) * height, std::clamp(fill, 0.0, 1.0));
}

SoftMask SoftMask::from_values(int width, int height, std::vector<double> values) {
    SoftMask m(width, height);
    if (values.size() != m.values_.size()) throw InvalidArgument("SoftMask: value count does not match dimensions");
    for (double v : values)
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("SoftMask: value outside [0,1]");
    m.values_ = std::move(values);
    return m;
}

SoftMask SoftMask::from_binary(const BinaryMask& mask) {
    SoftMask m(mask.width(), mask.height());
    for (std::size_t i = 0; i < m.values_.size(); ++i) m.values_[i] = mask.bits()[i] ? 1.0 : 0.0;
    return m;
}

namespace {

void require_same_size(int w0, int h0, int w1, int h1, const char* what) {
    if (w0 != w1 || h0 != h1) throw DimensionMismatch(std::string(what) + ": dimensions differ");
}

}  // namespace

double bce_loss(const SoftMask& pred, const SoftMask& gt, double clamp_eps) {
    require_same_size(pred.width(), pred.height(), gt.width(), gt.height(), "bce_loss");
    const auto& p = pred.values();
    const auto& g = gt.values();
    if (p.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::clamp(p[i], clamp_eps, 1.0 - clamp_eps);
        sum += g[i] * std::log(q) + (1.0 - g[i]) * std::log(1.0 - q);
    }
    return -sum / static_cast<double>(p.size());
}

SoftMask prior_relabel(const SoftMask& gt, const SoftMask& pred) {
    require_same_size(gt.width(), gt.height(), pred.width(), pred.height(), "prior_relabel");
    std::vector<double> out(gt.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double p = pred.values()[i];
        out[i] = gt.values()[i] >= 0.5 ? std::max(0.9, p) : std::min(0.1, p);
    }
    return SoftMask::from_values(gt.width(), gt.height(), std::move(out));
}

double prior_loss(std::span<const double> real_scores, std::span<const double> fake_scores, double clamp_eps) {
    if (real_scores.empty() || fake_scores.empty()) throw InvalidArgument("prior_loss: empty score list");
    double real = 0.0;
    for (double s : real_scores) real += std::log(std::clamp(s, clamp_eps, 1.0 - clamp_eps));
    double fake = 0.0;
    for (double s : fake_scores) fake += std::log(1.0 - std::clamp(s, clamp_eps, 1.0 - clamp_eps));
    return real / static_cast<double>(real_scores.size()) + fake / static_cast<double>(fake_scores.size());
}

double content_aware_loss(const DisplacementFlow& pred, const DisplacementFlow& gt, const SoftMask& content,
                          double beta) {
    require_same_size(pred.width(), pred.height(), gt.width(), gt.height(), "content_aware_loss");
    require_same_size(pred.width(), pred.height(), content.width(), content.height(), "content_aware_loss");
    const auto& p = pred.vectors();
    const auto& g = gt.vectors();
    if (p.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double r = std::hypot(g[i].du - p[i].du, g[i].dv - p[i].dv);
        sum += r + beta * content.values()[i] * r;
    }
    return sum / static_cast<double>(p.size());
}

double shift_invariant_loss(const DisplacementFlow& pred, const DisplacementFlow& gt) {
    require_same_size(pred.width(), pred.height(), gt.width(), gt.height(), "shift_invariant_loss");
    const auto& p = pred.vectors();
    const auto& g = gt.vectors();
    if (p.empty()) return 0.0;
    const double n = static_cast<double>(p.size());
    double mu = 0.0, mv = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        mu += g[i].du - p[i].du;
        mv += g[i].dv - p[i].dv;
    }
    mu /= n;
    mv /= n;
    double su = 0.0, sv = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double eu = g[i].du - p[i].du - mu;
        const double ev = g[i].dv - p[i].dv - mv;
        su += eu * eu;
        sv += ev * ev;
    }
    return (su + sv) / n;
}

}  // namespace marior
