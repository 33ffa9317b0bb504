#include "canopy/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "canopy/io.hpp"
#include "parallel.hpp"

namespace canopy::ensemble {

void PeakConfig::validate() const {
    if (!(kernel_m > 0.0))
        throw InvariantViolation("PeakConfig: kernel_m must be positive, got " +
                                 std::to_string(kernel_m));
    if (!(threshold > 0.0 && threshold < 1.0))
        throw InvariantViolation("PeakConfig: threshold must lie in (0,1), got " +
                                 std::to_string(threshold));
}

Raster average_rasters(const std::vector<Raster>& rasters, int threads) {
    if (rasters.empty())
        throw DegenerateInput("average_rasters: need at least one raster");
    const Raster& first = rasters.front();
    for (size_t i = 1; i < rasters.size(); ++i) {
        const Raster& r = rasters[i];
        std::vector<std::string> diffs;
        if (r.transform.origin_x != first.transform.origin_x ||
            r.transform.origin_y != first.transform.origin_y)
            diffs.push_back("origin");
        if (r.transform.gsd != first.transform.gsd) diffs.push_back("gsd");
        if (r.transform.rows != first.transform.rows || r.transform.cols != first.transform.cols)
            diffs.push_back("shape");
        if (r.bands != first.bands) diffs.push_back("bands");
        if (!diffs.empty()) {
            std::ostringstream os;
            os << "average_rasters: raster " << i << " differs from raster 0 in";
            for (const auto& d : diffs) os << ' ' << d;
            throw GridMismatch(os.str());
        }
    }

    Raster out(first.transform, first.bands, 0.0f);
    const size_t plane = static_cast<size_t>(first.rows()) * first.cols();
    const double inv_n = 1.0 / static_cast<double>(rasters.size());
    for (int band = 0; band < first.bands; ++band) {
        detail::parallel_rows(first.rows(), threads, [&](int row) {
            const size_t base = band * plane + static_cast<size_t>(row) * first.cols();
            for (int col = 0; col < first.cols(); ++col) {
                double acc = 0.0;
                for (const auto& r : rasters) acc += r.values[base + col];
                const double mean = acc * inv_n;
                out.values[base + col] =
                    static_cast<float>(std::clamp(mean, 0.0, 1.0));
            }
        });
    }
    return out;
}

int window_half_width(double kernel_m, double gsd) {
    const int w = static_cast<int>(std::lround(kernel_m / (2.0 * gsd)));
    return std::max(1, w);
}

std::vector<Detection> extract_peaks(const Raster& heat, const PeakConfig& cfg, int threads) {
    cfg.validate();
    if (heat.bands != 1)
        throw ShapeMismatch("extract_peaks: expected a single-band raster, got " +
                            std::to_string(heat.bands) + " bands");
    heat.validate(true);

    const int rows = heat.rows();
    const int cols = heat.cols();
    const int w = window_half_width(cfg.kernel_m, heat.transform.gsd);
    const float threshold = static_cast<float>(cfg.threshold);
    const float* v = heat.values.data();

    struct Peak {
        float value;
        int row, col;
    };
    std::vector<std::vector<Peak>> per_row(rows);
    detail::parallel_rows(rows, threads, [&](int r) {
        for (int c = 0; c < cols; ++c) {
            const float val = v[static_cast<size_t>(r) * cols + c];
            if (val < threshold) continue;
            const int r0 = std::max(0, r - w), r1 = std::min(rows - 1, r + w);
            const int c0 = std::max(0, c - w), c1 = std::min(cols - 1, c + w);
            bool keep = true;
            for (int rr = r0; rr <= r1 && keep; ++rr) {
                const float* wrow = v + static_cast<size_t>(rr) * cols;
                for (int cc = c0; cc <= c1; ++cc) {
                    if (rr == r && cc == c) continue;
                    const float other = wrow[cc];
                    // (value desc, row, col) total order: any window pixel
                    // that precedes (r,c) disqualifies it.
                    if (other > val || (other == val && (rr < r || (rr == r && cc < c)))) {
                        keep = false;
                        break;
                    }
                }
            }
            if (keep) per_row[r].push_back({val, r, c});
        }
    });

    std::vector<Peak> peaks;
    for (auto& pr : per_row)
        peaks.insert(peaks.end(), pr.begin(), pr.end());
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.row != b.row) return a.row < b.row;
        return a.col < b.col;
    });

    std::vector<Detection> dets;
    dets.reserve(peaks.size());
    char id[32];
    for (size_t i = 0; i < peaks.size(); ++i) {
        std::snprintf(id, sizeof(id), "det_%06zu", i);
        Detection d;
        d.det_id = id;
        d.position = pixel_to_world(heat.transform, {peaks[i].row, peaks[i].col});
        d.confidence = peaks[i].value;
        d.status = DetectionStatus::unmatched;
        d.provenance = Provenance::none;
        dets.push_back(std::move(d));
    }
    return dets;
}

} // namespace canopy::ensemble
