#include "canopy/types.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace canopy {

void WorldTransform::validate() const {
    if (!(gsd > 0.0) || !std::isfinite(gsd))
        throw InvariantViolation("WorldTransform: gsd must be positive and finite, got " +
                                 std::to_string(gsd));
    if (rows < 1 || cols < 1)
        throw InvariantViolation("WorldTransform: rows and cols must be >= 1, got " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y))
        throw InvariantViolation("WorldTransform: origin must be finite");
}

PixelIndex world_to_pixel(const WorldTransform& t, const Point& p) {
    t.validate();
    const double fc = std::floor((p.x - t.origin_x) / t.gsd);
    const double fr = std::floor((t.origin_y - p.y) / t.gsd);
    if (fc < 0 || fc >= t.cols) {
        std::ostringstream os;
        os << "world_to_pixel: x=" << p.x << " outside grid (cols " << t.cols
           << ", origin_x " << t.origin_x << ", gsd " << t.gsd << ")";
        throw OutOfBounds(os.str());
    }
    if (fr < 0 || fr >= t.rows) {
        std::ostringstream os;
        os << "world_to_pixel: y=" << p.y << " outside grid (rows " << t.rows
           << ", origin_y " << t.origin_y << ", gsd " << t.gsd << ")";
        throw OutOfBounds(os.str());
    }
    return {static_cast<int>(fr), static_cast<int>(fc)};
}

Point pixel_to_world(const WorldTransform& t, const PixelIndex& px) {
    t.validate();
    if (px.row < 0 || px.row >= t.rows || px.col < 0 || px.col >= t.cols) {
        std::ostringstream os;
        os << "pixel_to_world: pixel (" << px.row << "," << px.col
           << ") outside " << t.rows << "x" << t.cols << " grid";
        throw OutOfBounds(os.str());
    }
    return {t.origin_x + (px.col + 0.5) * t.gsd, t.origin_y - (px.row + 0.5) * t.gsd};
}

Raster::Raster(WorldTransform t, int bands_, float fill) : transform(t), bands(bands_) {
    transform.validate();
    if (bands < 1)
        throw InvariantViolation("Raster: bands must be >= 1, got " + std::to_string(bands));
    values.assign(static_cast<size_t>(bands) * transform.rows * transform.cols, fill);
}

void Raster::validate(bool in_unit_interval) const {
    transform.validate();
    if (bands < 1)
        throw InvariantViolation("Raster: bands must be >= 1, got " + std::to_string(bands));
    const size_t expected =
        static_cast<size_t>(bands) * transform.rows * transform.cols;
    if (values.size() != expected)
        throw InvariantViolation("Raster: value count " + std::to_string(values.size()) +
                                 " does not match bands*rows*cols = " + std::to_string(expected));
    const size_t plane = static_cast<size_t>(transform.rows) * transform.cols;
    for (size_t i = 0; i < values.size(); ++i) {
        const float v = values[i];
        if (!std::isfinite(v) || (in_unit_interval && (v < 0.0f || v > 1.0f))) {
            const int band = static_cast<int>(i / plane);
            const int row = static_cast<int>((i % plane) / transform.cols);
            const int col = static_cast<int>((i % plane) % transform.cols);
            std::ostringstream os;
            os << "Raster: invalid value " << v << " at band " << band << ", pixel ("
               << row << "," << col << ")";
            if (in_unit_interval && std::isfinite(v))
                os << " (prediction values must lie in [0,1])";
            throw InvariantViolation(os.str());
        }
    }
}

bool Parcel::is_monospecific() const {
    if (trees.empty()) return false;
    const std::string& first = trees.front().species;
    for (const auto& t : trees)
        if (t.species != first) return false;
    return true;
}

void Parcel::validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw InvariantViolation("Parcel " + parcel_id + ": radius must be positive, got " +
                                 std::to_string(radius));
    if (!std::isfinite(center.x) || !std::isfinite(center.y))
        throw InvariantViolation("Parcel " + parcel_id + ": center must be finite");
    std::set<std::string> ids;
    for (const auto& t : trees) {
        if (t.species.empty())
            throw InvariantViolation("Parcel " + parcel_id + ": tree " + t.tree_id +
                                     " has empty species");
        if (!ids.insert(t.tree_id).second)
            throw InvariantViolation("Parcel " + parcel_id + ": duplicate tree_id " + t.tree_id);
        const double off = std::hypot(t.dx, t.dy);
        if (off > radius) {
            std::ostringstream os;
            os << "Parcel " << parcel_id << ": tree " << t.tree_id << " offset " << off
               << " m exceeds radius " << radius << " m";
            throw InvariantViolation(os.str());
        }
    }
}

Point tree_world_position(const Parcel& parcel, const FieldTree& tree) {
    const double off = std::hypot(tree.dx, tree.dy);
    if (off > parcel.radius) {
        std::ostringstream os;
        os << "tree_world_position: tree " << tree.tree_id << " offset " << off
           << " m exceeds parcel " << parcel.parcel_id << " radius " << parcel.radius << " m";
        throw InvariantViolation(os.str());
    }
    return {parcel.center.x + tree.dx, parcel.center.y + tree.dy};
}

std::string to_string(DetectionStatus s) {
    switch (s) {
        case DetectionStatus::unmatched: return "unmatched";
        case DetectionStatus::verified: return "verified";
        case DetectionStatus::unverified: return "unverified";
        case DetectionStatus::discarded: return "discarded";
    }
    throw InvariantViolation("unknown DetectionStatus");
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::verified: return "verified";
        case Provenance::unverified: return "unverified";
        case Provenance::pseudo: return "pseudo";
        case Provenance::none: return "none";
    }
    throw InvariantViolation("unknown Provenance");
}

DetectionStatus detection_status_from_string(const std::string& s) {
    if (s == "unmatched") return DetectionStatus::unmatched;
    if (s == "verified") return DetectionStatus::verified;
    if (s == "unverified") return DetectionStatus::unverified;
    if (s == "discarded") return DetectionStatus::discarded;
    throw ParseError("unknown detection status \"" + s + "\"");
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "verified") return Provenance::verified;
    if (s == "unverified") return Provenance::unverified;
    if (s == "pseudo") return Provenance::pseudo;
    if (s == "none") return Provenance::none;
    throw ParseError("unknown provenance \"" + s + "\"");
}

void Detection::validate() const {
    if (det_id.empty())
        throw InvariantViolation("Detection: empty det_id");
    if (!std::isfinite(position.x) || !std::isfinite(position.y))
        throw InvariantViolation("Detection " + det_id + ": position must be finite");
    if (!(confidence >= 0.0 && confidence <= 1.0))
        throw InvariantViolation("Detection " + det_id + ": confidence " +
                                 std::to_string(confidence) + " outside [0,1]");
    if (status == DetectionStatus::verified && species.empty())
        throw InvariantViolation("Detection " + det_id + ": verified without species");
}

double euclidean_distance(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

} // namespace canopy
