#pragma once

#include <span>
#include <vector>

#include "marior/raster.hpp"
#include "marior/warpfield.hpp"

namespace marior {

// Soft per-pixel probabilities in [0,1].
class SoftMask {
public:
    SoftMask() = default;
    SoftMask(int width, int height, double fill = 0.0);
    static SoftMask from_values(int width, int height, std::vector<double> values);
    static SoftMask from_binary(const BinaryMask& mask);

    int width() const { return width_; }
    int height() const { return height_; }
    double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    const std::vector<double>& values() const { return values_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

struct LossConfig {
    double alpha = 0.005;
    double beta = 3.0;
    double lambda_prior = 0.01;  // no published value
    double clamp_eps = 1e-7;
};

// Mean binary cross-entropy with predictions clamped to [eps, 1 - eps].
double bce_loss(const SoftMask& pred, const SoftMask& gt, double clamp_eps = 1e-7);

// Soft relabelling of a one-hot ground truth: max(0.9, p) on foreground,
// min(0.1, p) on background.
SoftMask prior_relabel(const SoftMask& gt, const SoftMask& pred);

// mean(log real) + mean(log(1 - fake)) over discriminator scores.
double prior_loss(std::span<const double> real_scores, std::span<const double> fake_scores,
                  double clamp_eps = 1e-7);

// (1/N) sum (1 + beta * m_c) * |d - d_hat|.
double content_aware_loss(const DisplacementFlow& pred, const DisplacementFlow& gt, const SoftMask& content,
                          double beta);

// (1/(2N^2)) sum_ij ((d_i - d_j) - (p_i - p_j))^2 per component, summed over
// u and v. Evaluated as the population variance of the residual.
double shift_invariant_loss(const DisplacementFlow& pred, const DisplacementFlow& gt);

inline double icrm_total(double l_c, double l_s, double alpha) { return l_c + alpha * l_s; }

inline double mrm_total(double l_prior, double l_mask, double l_edge, double lambda_prior) {
    return lambda_prior * l_prior + l_mask + l_edge;
}

}  // namespace marior
