#pragma once

#include <vector>

#include "canopy/types.hpp"

namespace canopy::losses {

/// Gaussian target-heatmap parameters. sigma is in meters and converted to
/// pixels through the raster's gsd; beyond truncation*sigma the kernel is
/// written as exact zero.
struct HeatmapConfig {
    double sigma_m = 1.5;
    double truncation = 3.0;

    void validate() const;
};

/// Weights of the combined segmentation loss and the constants of its parts.
struct LossWeights {
    double w_tversky = 0.6;
    double w_focal = 0.4;
    double tversky_alpha = 0.3;
    double tversky_beta = 0.7;
    double focal_gamma = 2.0;
    double epsilon = 1e-7;

    /// w_tversky + w_focal must equal 1; all weights >= 0; epsilon > 0.
    void validate() const;
};

/// exp(-((i-cr)^2 + (j-cc)^2) / (2 sigma_px^2)) for pixel (i,j) and a kernel
/// centered at continuous pixel coordinates (cr, cc). In (0,1].
double gaussian_value(double center_row, double center_col, int i, int j, double sigma_px);

/// Target heatmap: per-pixel max over the points' Gaussian kernels.
/// Points are placed at their continuous pixel position; throws OutOfBounds
/// for points outside the grid.
Raster render_target(const std::vector<Point>& points, const WorldTransform& transform,
                     const HeatmapConfig& cfg, int threads = 1);

/// Mean squared error between two single-band rasters of equal shape.
double heatmap_loss(const Raster& pred, const Raster& target);

/// Sum of squared differences (the unreduced squared norm), same contract.
double heatmap_loss_sum_squares(const Raster& pred, const Raster& target);

/// 1 - (TP+eps)/(TP + alpha FP + beta FN + eps) with soft counts
/// TP = sum p*t, FP = sum p*(1-t), FN = sum (1-p)*t.
double tversky_loss(const Raster& pred, const Raster& target, const LossWeights& w);

/// Mean of -(1-p_t)^gamma log(p_t), p clamped to [eps, 1-eps] before logs;
/// gamma = 0 reduces to binary cross-entropy.
double focal_loss(const Raster& pred, const Raster& target, double gamma,
                  double epsilon = 1e-7);

/// w_tversky * tversky_loss + w_focal * focal_loss.
double combined_seg_loss(const Raster& pred, const Raster& target, const LossWeights& w);

} // namespace canopy::losses
