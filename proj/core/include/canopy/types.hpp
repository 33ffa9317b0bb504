#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "canopy/errors.hpp"

namespace canopy {

/// A point in world coordinates (meters, one shared projected planar CRS).
struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Affine georeferencing of a north-up raster with square pixels.
///
/// (origin_x, origin_y) is the outer corner of pixel (0,0); y decreases with
/// increasing row. Pixel (r,c) covers the half-open square
/// [origin_x + c*gsd, origin_x + (c+1)*gsd) x (origin_y - (r+1)*gsd, origin_y - r*gsd]
/// and its center is (origin_x + (c+0.5)*gsd, origin_y - (r+0.5)*gsd).
struct WorldTransform {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double gsd = 1.0; // meters per pixel, square pixels
    int rows = 0;
    int cols = 0;

    bool operator==(const WorldTransform&) const = default;

    /// Throws InvariantViolation unless gsd > 0 and rows, cols >= 1.
    void validate() const;
};

struct PixelIndex {
    int row = 0;
    int col = 0;

    bool operator==(const PixelIndex&) const = default;
    auto operator<=>(const PixelIndex&) const = default;
};

/// Pixel whose cell contains p; throws OutOfBounds outside the grid.
PixelIndex world_to_pixel(const WorldTransform& t, const Point& p);

/// World center of pixel (r,c); throws OutOfBounds outside the grid.
Point pixel_to_world(const WorldTransform& t, const PixelIndex& px);

/// Single- or multi-band float grid with a world transform.
/// Band-sequential storage: values[band * rows*cols + row * cols + col].
/// All values must be finite; prediction rasters additionally lie in [0,1].
struct Raster {
    WorldTransform transform;
    int bands = 1;
    std::vector<float> values;

    Raster() = default;
    Raster(WorldTransform t, int bands_, float fill = 0.0f);

    int rows() const { return transform.rows; }
    int cols() const { return transform.cols; }

    float at(int band, int row, int col) const {
        return values[static_cast<size_t>(band) * rows() * cols() +
                      static_cast<size_t>(row) * cols() + col];
    }
    float& at(int band, int row, int col) {
        return values[static_cast<size_t>(band) * rows() * cols() +
                      static_cast<size_t>(row) * cols() + col];
    }

    /// Checks the shape/band/value-count invariants and finiteness of every
    /// value. With in_unit_interval, additionally requires 0 <= v <= 1.
    /// Error messages name the first offending pixel.
    void validate(bool in_unit_interval = false) const;
};

/// One field-measured tree, positioned relative to its parcel center.
struct FieldTree {
    std::string tree_id;
    double dx = 0.0; // meters east of parcel center
    double dy = 0.0; // meters north of parcel center
    std::string species; // genus_species code, non-empty
};

/// Circular field plot with its recorded trees.
struct Parcel {
    std::string parcel_id;
    Point center;
    double radius = 25.0; // meters
    std::vector<FieldTree> trees;

    /// True when the parcel has at least one tree and all trees share one
    /// species. An empty parcel is not monospecific: there is no species
    /// to assign.
    bool is_monospecific() const;

    /// Throws InvariantViolation on bad radius, duplicate tree ids, empty
    /// species, or offsets beyond the radius.
    void validate() const;
};

/// World position of a tree: parcel center plus local offset.
/// Throws InvariantViolation when the offset exceeds the parcel radius.
Point tree_world_position(const Parcel& parcel, const FieldTree& tree);

enum class DetectionStatus : uint8_t { unmatched, verified, unverified, discarded };
enum class Provenance : uint8_t { verified, unverified, pseudo, none };

std::string to_string(DetectionStatus s);
std::string to_string(Provenance p);
DetectionStatus detection_status_from_string(const std::string& s);
Provenance provenance_from_string(const std::string& s);

/// A predicted individual tree position.
struct Detection {
    std::string det_id;
    Point position;
    double confidence = 0.0; // in [0,1]
    DetectionStatus status = DetectionStatus::unmatched;
    std::string species; // empty = no species assigned
    Provenance provenance = Provenance::none;

    /// verified implies species present; confidence in [0,1]; finite position.
    void validate() const;
};

double euclidean_distance(const Point& a, const Point& b);

} // namespace canopy
