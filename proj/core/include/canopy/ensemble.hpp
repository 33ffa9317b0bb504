#pragma once

#include <vector>

#include "canopy/types.hpp"

namespace canopy::ensemble {

/// Local-maxima extraction parameters: kernel_m is the full side of the
/// search window in meters, threshold the minimum confidence of a peak.
struct PeakConfig {
    double kernel_m = 2.0;
    double threshold = 0.25;

    void validate() const;
};

/// Per-pixel arithmetic mean of prediction rasters, summed in input order.
/// All inputs must share one grid (origin, gsd, shape, bands); mismatches
/// raise GridMismatch naming the differing fields. No resampling.
Raster average_rasters(const std::vector<Raster>& rasters, int threads = 1);

/// Window half-width in pixels for a kernel side of kernel_m meters:
/// round(kernel_m / (2 gsd)), at least 1.
int window_half_width(double kernel_m, double gsd);

/// Local maxima of a single-band heatmap. A pixel is kept iff its value is
/// >= threshold and it precedes every other pixel of its window under the
/// order (value desc, row, col) - i.e. strictly greater than all of them,
/// with equal-valued ties resolved toward the smallest (row, col). Output
/// detections carry pixel-center world coordinates and the pixel value as
/// confidence, sorted by descending confidence then (row, col); ids are
/// "det_NNNNNN" in that order.
std::vector<Detection> extract_peaks(const Raster& heat, const PeakConfig& cfg,
                                     int threads = 1);

} // namespace canopy::ensemble
