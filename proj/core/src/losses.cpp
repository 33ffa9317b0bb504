#include "canopy/losses.hpp"

#include <cmath>
#include <sstream>

#include "parallel.hpp"

namespace canopy::losses {

void HeatmapConfig::validate() const {
    if (!(sigma_m > 0.0) || !std::isfinite(sigma_m))
        throw InvariantViolation("HeatmapConfig: sigma must be positive, got " +
                                 std::to_string(sigma_m));
    if (!(truncation >= 3.0))
        throw InvariantViolation("HeatmapConfig: truncation must be >= 3, got " +
                                 std::to_string(truncation));
}

void LossWeights::validate() const {
    if (w_tversky < 0.0 || w_focal < 0.0 || tversky_alpha < 0.0 || tversky_beta < 0.0 ||
        focal_gamma < 0.0)
        throw InvariantViolation("LossWeights: weights must be non-negative");
    if (std::abs(w_tversky + w_focal - 1.0) > 1e-9)
        throw InvariantViolation("LossWeights: w_tversky + w_focal must equal 1, got " +
                                 std::to_string(w_tversky + w_focal));
    if (!(epsilon > 0.0))
        throw InvariantViolation("LossWeights: epsilon must be positive");
}

double gaussian_value(double center_row, double center_col, int i, int j, double sigma_px) {
    const double di = i - center_row;
    const double dj = j - center_col;
    return std::exp(-(di * di + dj * dj) / (2.0 * sigma_px * sigma_px));
}

Raster render_target(const std::vector<Point>& points, const WorldTransform& transform,
                     const HeatmapConfig& cfg, int threads) {
    transform.validate();
    cfg.validate();
    const double sigma_px = cfg.sigma_m / transform.gsd;
    const int reach = static_cast<int>(std::ceil(cfg.truncation * sigma_px));

    // Kernel centers in the pixel-center lattice: pixel (i,j) samples the
    // world at its cell center, so the nearest lattice point of a kernel is
    // the point's containing pixel. world_to_pixel doubles as the bounds check.
    struct Center {
        double row, col;
    };
    std::vector<Center> centers;
    centers.reserve(points.size());
    for (const auto& p : points) {
        world_to_pixel(transform, p);
        centers.push_back({(transform.origin_y - p.y) / transform.gsd - 0.5,
                           (p.x - transform.origin_x) / transform.gsd - 0.5});
    }

    const double cutoff_sq = (cfg.truncation * sigma_px) * (cfg.truncation * sigma_px);
    Raster out(transform, 1, 0.0f);
    detail::parallel_rows(transform.rows, threads, [&](int r) {
        float* row = out.values.data() + static_cast<size_t>(r) * transform.cols;
        for (const auto& c : centers) {
            if (r < static_cast<int>(std::floor(c.row)) - reach ||
                r > static_cast<int>(std::ceil(c.row)) + reach)
                continue;
            const int c0 = std::max(0, static_cast<int>(std::floor(c.col)) - reach);
            const int c1 = std::min(transform.cols - 1, static_cast<int>(std::ceil(c.col)) + reach);
            const double di = r - c.row;
            for (int j = c0; j <= c1; ++j) {
                const double dj = j - c.col;
                if (di * di + dj * dj > cutoff_sq) continue; // truncated to zero
                const double v = gaussian_value(c.row, c.col, r, j, sigma_px);
                const float f = static_cast<float>(v);
                if (f > row[j]) row[j] = f;
            }
        }
    });
    return out;
}

namespace {

void require_same_single_band(const Raster& pred, const Raster& target, const char* op) {
    if (pred.bands != 1 || target.bands != 1)
        throw ShapeMismatch(std::string(op) + ": expected single-band rasters, got " +
                            std::to_string(pred.bands) + " and " + std::to_string(target.bands));
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        std::ostringstream os;
        os << op << ": shape mismatch " << pred.rows() << "x" << pred.cols() << " vs "
           << target.rows() << "x" << target.cols();
        throw ShapeMismatch(os.str());
    }
}

} // namespace

double heatmap_loss_sum_squares(const Raster& pred, const Raster& target) {
    require_same_single_band(pred, target, "heatmap_loss");
    double acc = 0.0;
    for (size_t i = 0; i < pred.values.size(); ++i) {
        const double d = static_cast<double>(pred.values[i]) - target.values[i];
        acc += d * d;
    }
    return acc;
}

double heatmap_loss(const Raster& pred, const Raster& target) {
    return heatmap_loss_sum_squares(pred, target) / static_cast<double>(pred.values.size());
}

double tversky_loss(const Raster& pred, const Raster& target, const LossWeights& w) {
    require_same_single_band(pred, target, "tversky_loss");
    w.validate();
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (size_t i = 0; i < pred.values.size(); ++i) {
        const double p = pred.values[i];
        const double t = target.values[i];
        tp += p * t;
        fp += p * (1.0 - t);
        fn += (1.0 - p) * t;
    }
    return 1.0 - (tp + w.epsilon) / (tp + w.tversky_alpha * fp + w.tversky_beta * fn + w.epsilon);
}

double focal_loss(const Raster& pred, const Raster& target, double gamma, double epsilon) {
    require_same_single_band(pred, target, "focal_loss");
    if (!(epsilon > 0.0) || !(gamma >= 0.0))
        throw InvariantViolation("focal_loss: need epsilon > 0 and gamma >= 0");
    double acc = 0.0;
    for (size_t i = 0; i < pred.values.size(); ++i) {
        const double p = std::clamp(static_cast<double>(pred.values[i]), epsilon, 1.0 - epsilon);
        const double t = target.values[i];
        const double p_t = (t != 0.0f) ? p : 1.0 - p;
        acc += -std::pow(1.0 - p_t, gamma) * std::log(p_t);
    }
    return acc / static_cast<double>(pred.values.size());
}

double combined_seg_loss(const Raster& pred, const Raster& target, const LossWeights& w) {
    w.validate();
    return w.w_tversky * tversky_loss(pred, target, w) +
           w.w_focal * focal_loss(pred, target, w.focal_gamma, w.epsilon);
}

} // namespace canopy::losses
