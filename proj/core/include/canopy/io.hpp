#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "canopy/types.hpp"

namespace canopy {

/// Shortest decimal string that round-trips the double exactly.
/// Used for every float written to CSV/JSON so artifacts are byte-stable.
std::string format_double(double v);

/// Parse a double; throws ParseError naming `context` on failure.
double parse_double(const std::string& s, const std::string& context);

// ---------------------------------------------------------------------------
// Rasters. Format chosen by extension: .asc = ESRI ASCII grid (single band),
// .tif/.tiff = GeoTIFF (uncompressed float32 strips, 1..4 bands).
// ---------------------------------------------------------------------------

/// Loads a raster and validates its invariants (finite values everywhere).
/// With as_prediction, values must additionally lie in [0,1].
Raster load_raster(const std::filesystem::path& path, bool as_prediction = false);

void save_raster(const Raster& raster, const std::filesystem::path& path);

Raster load_ascii_grid(const std::filesystem::path& path);
void save_ascii_grid(const Raster& raster, const std::filesystem::path& path);

Raster load_geotiff(const std::filesystem::path& path);
void save_geotiff(const Raster& raster, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Parcels CSV: header parcel_id,center_x,center_y,radius_m,tree_id,dx_m,dy_m,species
// one row per tree; parcels returned in first-appearance order.
// ---------------------------------------------------------------------------

std::vector<Parcel> load_parcels(const std::filesystem::path& path);
void save_parcels(const std::vector<Parcel>& parcels, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Detections. Format chosen by extension: .geojson/.json = GeoJSON
// FeatureCollection of Points, .csv = flat mirror with header
// det_id,x,y,confidence,status,species,provenance.
// ---------------------------------------------------------------------------

std::vector<Detection> load_detections(const std::filesystem::path& path);
void save_detections(const std::vector<Detection>& detections,
                     const std::filesystem::path& path);

/// Splits one CSV line on commas (no quoting; fields must not contain commas).
std::vector<std::string> split_csv_line(const std::string& line);

} // namespace canopy
