#include "canopy/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "canopy/io.hpp"
#include "png_io.hpp"

namespace canopy::dataset {

void PatchSpec::validate() const {
    if (size_px < 8 || size_px % 2 != 0)
        throw InvariantViolation("PatchSpec: size_px must be even and >= 8, got " +
                                 std::to_string(size_px));
    if (bands < 1)
        throw InvariantViolation("PatchSpec: bands must be >= 1");
    if (!std::isfinite(pad_value))
        throw InvariantViolation("PatchSpec: pad_value must be finite");
}

Patch extract_patch(const Raster& imagery, const Point& center, const PatchSpec& spec) {
    spec.validate();
    if (imagery.bands != spec.bands)
        throw BandMismatch("extract_patch: imagery has " + std::to_string(imagery.bands) +
                           " bands, expected " + std::to_string(spec.bands));
    const PixelIndex px = world_to_pixel(imagery.transform, center);

    Patch patch;
    patch.size_px = spec.size_px;
    patch.bands = spec.bands;
    patch.values.assign(static_cast<size_t>(spec.size_px) * spec.size_px * spec.bands,
                        spec.pad_value);
    const int half = spec.size_px / 2;
    const int r0 = px.row - half;
    const int c0 = px.col - half;
    patch.clipped = r0 < 0 || c0 < 0 || r0 + spec.size_px > imagery.rows() ||
                    c0 + spec.size_px > imagery.cols();
    const size_t plane = static_cast<size_t>(imagery.rows()) * imagery.cols();
    for (int b = 0; b < spec.bands; ++b) {
        for (int r = std::max(0, r0); r < std::min(imagery.rows(), r0 + spec.size_px); ++r) {
            for (int c = std::max(0, c0); c < std::min(imagery.cols(), c0 + spec.size_px); ++c) {
                patch.values[(static_cast<size_t>(b) * spec.size_px + (r - r0)) * spec.size_px +
                             (c - c0)] = imagery.values[b * plane + static_cast<size_t>(r) * imagery.cols() + c];
            }
        }
    }
    return patch;
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::unassigned: return "unassigned";
    }
    throw InvariantViolation("unknown Split");
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "unassigned") return Split::unassigned;
    throw ParseError("unknown split \"" + s + "\"");
}

namespace {

// Nearest parcel whose radius contains the point; ties toward the smaller
// parcel_id. Empty string when no parcel contains it.
std::string attribute_parcel(const Point& p, const std::vector<Parcel>& parcels) {
    std::string best;
    double best_dist = 0.0;
    for (const auto& parcel : parcels) {
        const double d = euclidean_distance(p, parcel.center);
        if (d > parcel.radius) continue;
        if (best.empty() || d < best_dist || (d == best_dist && parcel.parcel_id < best)) {
            best = parcel.parcel_id;
            best_dist = d;
        }
    }
    return best;
}

void validate_row(const ManifestRow& row) {
    const bool has_species = !row.species.empty();
    if ((row.provenance == Provenance::verified || row.provenance == Provenance::unverified) &&
        !has_species)
        throw InvariantViolation("ManifestRow " + row.det_id + ": provenance " +
                                 canopy::to_string(row.provenance) + " requires a species");
    if (row.provenance == Provenance::none && has_species)
        throw InvariantViolation("ManifestRow " + row.det_id +
                                 ": species present but provenance is none");
    if (!(row.weight >= 0.0) || !std::isfinite(row.weight))
        throw InvariantViolation("ManifestRow " + row.det_id + ": weight must be >= 0");
}

} // namespace

Manifest build_manifest(const std::vector<Detection>& detections,
                        const std::optional<propagation::PseudoLabelSet>& pseudo,
                        const Raster& imagery, const std::vector<Parcel>& parcels,
                        const PatchSpec& spec, const std::string& patch_dir) {
    spec.validate();

    std::map<std::string, const propagation::PseudoLabel*> pseudo_by_id;
    if (pseudo) {
        for (const auto& e : pseudo->entries)
            if (!pseudo_by_id.emplace(e.id, &e).second)
                throw DuplicateId("build_manifest: duplicate pseudo-label id " + e.id);
    }

    std::set<std::string> seen;
    Manifest manifest;
    manifest.reserve(detections.size());
    for (const auto& d : detections) {
        if (!seen.insert(d.det_id).second)
            throw DuplicateId("build_manifest: duplicate det_id " + d.det_id);
        if (d.status == DetectionStatus::discarded) continue;
        d.validate();

        ManifestRow row;
        row.det_id = d.det_id;
        row.patch_path = patch_dir + "/" + d.det_id + ".png";
        row.parcel_id = attribute_parcel(d.position, parcels);
        row.species = d.species;
        row.provenance = d.provenance;
        row.weight = 1.0;

        if (auto it = pseudo_by_id.find(d.det_id); it != pseudo_by_id.end()) {
            if (d.provenance != Provenance::none)
                throw InvariantViolation("build_manifest: pseudo-label for " + d.det_id +
                                         " but the detection is already labeled (" +
                                         canopy::to_string(d.provenance) + ")");
            row.species = it->second->species;
            row.provenance = Provenance::pseudo;
            row.weight = it->second->certainty * it->second->class_weight;
        }

        // clipped flag from the patch geometry; also validates center bounds
        row.clipped = extract_patch(imagery, d.position, spec).clipped;
        validate_row(row);
        manifest.push_back(std::move(row));
    }
    std::sort(manifest.begin(), manifest.end(),
              [](const ManifestRow& a, const ManifestRow& b) { return a.det_id < b.det_id; });
    return manifest;
}

size_t write_patches(const Manifest& manifest, const std::vector<Detection>& detections,
                     const Raster& imagery, const PatchSpec& spec,
                     const std::filesystem::path& out_dir) {
    spec.validate();
    std::map<std::string, const Detection*> det_by_id;
    for (const auto& d : detections) det_by_id[d.det_id] = &d;

    // Native imagery range for the 8-bit scaling.
    float lo = imagery.values.empty() ? 0.0f : imagery.values.front();
    float hi = lo;
    for (float v : imagery.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double scale = (hi > lo) ? 255.0 / (hi - lo) : 0.0;

    size_t written = 0;
    std::filesystem::path patch_root;
    for (const auto& row : manifest) {
        auto it = det_by_id.find(row.det_id);
        if (it == det_by_id.end())
            throw InvariantViolation("write_patches: manifest row " + row.det_id +
                                     " has no matching detection");
        const Patch patch = extract_patch(imagery, it->second->position, spec);
        std::vector<uint8_t> bytes(patch.values.size());
        const size_t plane = static_cast<size_t>(patch.size_px) * patch.size_px;
        for (int r = 0; r < patch.size_px; ++r)
            for (int c = 0; c < patch.size_px; ++c)
                for (int b = 0; b < patch.bands; ++b)
                    bytes[(static_cast<size_t>(r) * patch.size_px + c) * patch.bands + b] =
                        static_cast<uint8_t>(std::lround(
                            std::clamp((patch.values[b * plane + static_cast<size_t>(r) * patch.size_px + c] - lo) * scale,
                                       0.0, 255.0)));
        const std::filesystem::path path = out_dir / row.patch_path;
        std::filesystem::create_directories(path.parent_path());
        patch_root = path.parent_path();
        detail::write_png8(path, patch.size_px, patch.size_px, patch.bands, bytes);
        ++written;
    }

    if (!patch_root.empty()) {
        nlohmann::ordered_json meta;
        meta["scale_min"] = lo;
        meta["scale_max"] = hi;
        meta["bands"] = spec.bands;
        meta["size_px"] = spec.size_px;
        std::ofstream out(patch_root / "meta.json");
        if (!out)
            throw IoError("cannot write " + (patch_root / "meta.json").string());
        out << meta.dump(2) << "\n";
    }
    return written;
}

std::vector<std::pair<std::string, long>> species_histogram(const Manifest& manifest,
                                                            long min_count) {
    std::map<std::string, long> counts;
    for (const auto& row : manifest)
        if (!row.species.empty()) ++counts[row.species];
    std::vector<std::pair<std::string, long>> out(counts.begin(), counts.end());
    std::erase_if(out, [min_count](const auto& e) { return e.second <= min_count; });
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

Manifest split_manifest(const Manifest& manifest, double train_fraction, uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidFraction("split_manifest: train_fraction must lie in (0,1), got " +
                              std::to_string(train_fraction));

    // Group key: parcel_id, or a singleton group for parcel-less rows.
    using GroupKey = std::pair<int, std::string>; // 0 = parcel, 1 = singleton
    auto key_of = [](const ManifestRow& r) -> GroupKey {
        return r.parcel_id.empty() ? GroupKey{1, r.det_id} : GroupKey{0, r.parcel_id};
    };

    std::map<GroupKey, std::vector<size_t>> groups;
    for (size_t i = 0; i < manifest.size(); ++i)
        groups[key_of(manifest[i])].push_back(i);

    // Groups holding unverified or pseudo rows never reach val.
    std::vector<const std::vector<size_t>*> eligible;
    std::vector<const std::vector<size_t>*> forced_train;
    size_t eligible_rows = 0;
    for (const auto& [key, rows] : groups) {
        const bool forced = std::any_of(rows.begin(), rows.end(), [&](size_t i) {
            const auto p = manifest[i].provenance;
            return p == Provenance::unverified || p == Provenance::pseudo;
        });
        if (forced) {
            forced_train.push_back(&rows);
        } else {
            eligible.push_back(&rows);
            eligible_rows += rows.size();
        }
    }

    // Fisher-Yates over the (deterministically ordered) eligible groups.
    uint64_t state = seed;
    for (size_t i = eligible.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(splitmix64(state) % i);
        std::swap(eligible[i - 1], eligible[j]);
    }

    Manifest out = manifest;
    const double target = train_fraction * static_cast<double>(eligible_rows);
    size_t train_rows = 0;
    for (const auto* rows : eligible) {
        const Split split = (static_cast<double>(train_rows) < target) ? Split::train : Split::val;
        if (split == Split::train) train_rows += rows->size();
        for (size_t i : *rows) out[i].split = split;
    }
    for (const auto* rows : forced_train)
        for (size_t i : *rows) out[i].split = Split::train;
    return out;
}

DatasetStats dataset_stats(const Manifest& manifest, const std::vector<Parcel>& parcels) {
    DatasetStats s;
    s.total = static_cast<long>(manifest.size());
    std::set<std::string> species;
    for (const auto& row : manifest) {
        if (row.provenance == Provenance::verified) ++s.verified;
        if (!row.species.empty()) species.insert(row.species);
    }
    s.verified_fraction = s.total > 0 ? static_cast<double>(s.verified) / s.total : 0.0;
    s.parcels = static_cast<long>(parcels.size());
    for (const auto& p : parcels)
        if (p.is_monospecific()) ++s.monospecific;
    s.monospecific_fraction = s.parcels > 0 ? static_cast<double>(s.monospecific) / s.parcels : 0.0;
    s.species_count = static_cast<long>(species.size());
    return s;
}

std::string render_stats(const DatasetStats& stats) {
    char buf[128];
    std::string out;
    out += "trees: " + std::to_string(stats.total) + "\n";
    std::snprintf(buf, sizeof(buf), "verified: %.1f%% (%ld)\n", stats.verified_fraction * 100.0,
                  stats.verified);
    out += buf;
    out += "parcels: " + std::to_string(stats.parcels) + "\n";
    std::snprintf(buf, sizeof(buf), "monospecific: %.1f%% (%ld)\n",
                  stats.monospecific_fraction * 100.0, stats.monospecific);
    out += buf;
    out += "species: " + std::to_string(stats.species_count) + "\n";
    return out;
}

namespace {
const std::string kManifestHeader =
    "patch_path,det_id,parcel_id,species,provenance,weight,split,clipped";
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path.string() + ": empty file (expected header \"" + kManifestHeader +
                         "\")");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kManifestHeader)
        throw ParseError(path.string() + ":1: bad header, expected \"" + kManifestHeader + "\"");

    Manifest manifest;
    std::set<std::string> seen;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto at = [&](const std::string& msg) {
            return path.string() + ":" + std::to_string(line_no) + ": " + msg;
        };
        const auto fields = split_csv_line(line);
        if (fields.size() != 8)
            throw ParseError(at("expected 8 fields, got " + std::to_string(fields.size())));
        ManifestRow row;
        row.patch_path = fields[0];
        row.det_id = fields[1];
        row.parcel_id = fields[2];
        row.species = fields[3];
        row.provenance = provenance_from_string(fields[4]);
        row.weight = parse_double(fields[5], at("weight"));
        row.split = split_from_string(fields[6]);
        if (fields[7] == "true") {
            row.clipped = true;
        } else if (fields[7] == "false") {
            row.clipped = false;
        } else {
            throw ParseError(at("clipped must be true or false, got \"" + fields[7] + "\""));
        }
        if (row.det_id.empty())
            throw ParseError(at("empty det_id"));
        if (!seen.insert(row.det_id).second)
            throw DuplicateId(at("duplicate det_id " + row.det_id));
        try {
            validate_row(row);
        } catch (const InvariantViolation& e) {
            throw InvariantViolation(at(e.what()));
        }
        manifest.push_back(std::move(row));
    }
    return manifest;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << kManifestHeader << "\n";
    for (const auto& row : manifest) {
        validate_row(row);
        out << row.patch_path << ',' << row.det_id << ',' << row.parcel_id << ',' << row.species
            << ',' << canopy::to_string(row.provenance) << ',' << format_double(row.weight) << ','
            << to_string(row.split) << ',' << (row.clipped ? "true" : "false") << "\n";
    }
    if (!out)
        throw IoError("write failed for " + path.string());
}

} // namespace canopy::dataset
