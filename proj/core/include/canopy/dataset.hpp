#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "canopy/propagation.hpp"
#include "canopy/types.hpp"

namespace canopy::dataset {

/// Geometry of the extracted training patches.
struct PatchSpec {
    int size_px = 64;     // even, >= 8
    int bands = 4;        // expected imagery bands (RGB + NIR)
    float pad_value = 0.0f;

    void validate() const;
};

/// A size_px x size_px x bands window around one detection, band-sequential.
struct Patch {
    int size_px = 0;
    int bands = 0;
    std::vector<float> values;
    bool clipped = false;

    float at(int band, int row, int col) const {
        return values[(static_cast<size_t>(band) * size_px + row) * size_px + col];
    }
};

/// Window centered on the detection's pixel, rows [r - size/2, r + size/2);
/// out-of-image cells are pad_value and set the clipped flag. Throws
/// OutOfBounds when the center itself is outside, BandMismatch when the
/// imagery does not carry spec.bands bands.
Patch extract_patch(const Raster& imagery, const Point& center, const PatchSpec& spec);

enum class Split : uint8_t { train, val, unassigned };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct ManifestRow {
    std::string patch_path;
    std::string det_id;
    std::string parcel_id; // empty = none
    std::string species;   // empty = none
    Provenance provenance = Provenance::none;
    double weight = 1.0;
    Split split = Split::unassigned;
    bool clipped = false;
};

using Manifest = std::vector<ManifestRow>;

/// One row per kept detection (discarded ones are excluded upstream),
/// ordered by det_id. Pseudo entries override provenance/species/weight of
/// the matching unlabeled detections (weight = certainty * class weight).
/// Each detection is attributed to the nearest parcel containing it, if
/// any. The clipped flag comes from extracting the patch geometry against
/// the imagery. Patch paths are patch_dir/<det_id>.png.
Manifest build_manifest(const std::vector<Detection>& detections,
                        const std::optional<propagation::PseudoLabelSet>& pseudo,
                        const Raster& imagery, const std::vector<Parcel>& parcels,
                        const PatchSpec& spec, const std::string& patch_dir = "patches");

/// Writes the patch PNGs referenced by the manifest (8-bit, scaled from the
/// imagery range) under out_dir, plus out_dir/<patch_dir>/meta.json holding
/// the scale. Returns the number of files written.
size_t write_patches(const Manifest& manifest, const std::vector<Detection>& detections,
                     const Raster& imagery, const PatchSpec& spec,
                     const std::filesystem::path& out_dir);

/// (species, count) over labeled rows, count descending then species
/// ascending; species with count <= min_count are dropped.
std::vector<std::pair<std::string, long>> species_histogram(const Manifest& manifest,
                                                            long min_count = 0);

/// Grouped train/val split: all rows of one parcel share a split (rows
/// without a parcel form singleton groups). Groups containing unverified or
/// pseudo rows always train; the rest are shuffled by a splitmix64
/// Fisher-Yates keyed on `seed` and assigned to train until the train row
/// count reaches train_fraction of the shuffled rows.
Manifest split_manifest(const Manifest& manifest, double train_fraction, uint64_t seed);

struct DatasetStats {
    long total = 0;
    long verified = 0;
    double verified_fraction = 0.0;
    long parcels = 0;
    long monospecific = 0;
    double monospecific_fraction = 0.0;
    long species_count = 0;
};

DatasetStats dataset_stats(const Manifest& manifest, const std::vector<Parcel>& parcels);

/// One-decimal-percentage text rendering, e.g. "20.0%" and "60.0% (3)".
std::string render_stats(const DatasetStats& stats);

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// splitmix64: the documented deterministic PRNG behind split_manifest.
uint64_t splitmix64(uint64_t& state);

} // namespace canopy::dataset
