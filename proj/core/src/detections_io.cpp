#include "canopy/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <json.hpp>

namespace canopy {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::string kDetectionsHeader = "det_id,x,y,confidence,status,species,provenance";

std::string lower_ext(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

void check_unique_ids(const std::vector<Detection>& dets, const std::string& where) {
    std::set<std::string> ids;
    for (const auto& d : dets)
        if (!ids.insert(d.det_id).second)
            throw DuplicateId(where + ": duplicate det_id " + d.det_id);
}

std::vector<Detection> load_detections_geojson(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": invalid JSON: " + e.what());
    }
    if (doc.value("type", "") != "FeatureCollection")
        throw ParseError(path.string() + ": expected a GeoJSON FeatureCollection");
    if (!doc.contains("features") || !doc["features"].is_array())
        throw ParseError(path.string() + ": missing \"features\" array");

    std::vector<Detection> dets;
    size_t idx = 0;
    for (const auto& f : doc["features"]) {
        const auto at = [&](const std::string& msg) {
            return path.string() + ": feature " + std::to_string(idx) + ": " + msg;
        };
        if (f.value("type", "") != "Feature")
            throw ParseError(at("expected type Feature"));
        const auto& geom = f.contains("geometry") ? f["geometry"] : ordered_json();
        if (!geom.is_object() || geom.value("type", "") != "Point")
            throw ParseError(at("geometry must be a Point"));
        const auto& coords = geom.contains("coordinates") ? geom["coordinates"] : ordered_json();
        if (!coords.is_array() || coords.size() < 2 || !coords[0].is_number() ||
            !coords[1].is_number())
            throw ParseError(at("coordinates must be [x, y]"));
        const auto& props = f.contains("properties") ? f["properties"] : ordered_json();
        if (!props.is_object())
            throw ParseError(at("missing properties"));
        Detection d;
        d.position = {coords[0].get<double>(), coords[1].get<double>()};
        if (!props.contains("det_id") || !props["det_id"].is_string())
            throw ParseError(at("properties.det_id must be a string"));
        d.det_id = props["det_id"].get<std::string>();
        if (!props.contains("confidence") || !props["confidence"].is_number())
            throw ParseError(at("properties.confidence must be a number"));
        d.confidence = props["confidence"].get<double>();
        d.status = detection_status_from_string(props.value("status", "unmatched"));
        if (props.contains("species") && !props["species"].is_null()) {
            if (!props["species"].is_string())
                throw ParseError(at("properties.species must be a string or null"));
            d.species = props["species"].get<std::string>();
        }
        d.provenance = provenance_from_string(props.value("provenance", "none"));
        try {
            d.validate();
        } catch (const InvariantViolation& e) {
            throw InvariantViolation(at(e.what()));
        }
        dets.push_back(std::move(d));
        ++idx;
    }
    check_unique_ids(dets, path.string());
    return dets;
}

void save_detections_geojson(const std::vector<Detection>& dets,
                             const std::filesystem::path& path) {
    ordered_json features = ordered_json::array();
    for (const auto& d : dets) {
        d.validate();
        ordered_json f;
        f["type"] = "Feature";
        f["geometry"] = {{"type", "Point"},
                         {"coordinates", ordered_json::array({d.position.x, d.position.y})}};
        ordered_json props;
        props["det_id"] = d.det_id;
        props["confidence"] = d.confidence;
        props["status"] = to_string(d.status);
        props["species"] = d.species.empty() ? ordered_json(nullptr) : ordered_json(d.species);
        props["provenance"] = to_string(d.provenance);
        f["properties"] = std::move(props);
        features.push_back(std::move(f));
    }
    ordered_json doc;
    doc["type"] = "FeatureCollection";
    doc["features"] = std::move(features);

    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << doc.dump(2) << "\n";
    if (!out)
        throw IoError("write failed for " + path.string());
}

std::vector<Detection> load_detections_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path.string() + ": empty file (expected header \"" +
                         kDetectionsHeader + "\")");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kDetectionsHeader)
        throw ParseError(path.string() + ":1: bad header, expected \"" + kDetectionsHeader + "\"");

    std::vector<Detection> dets;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto at = [&](const std::string& msg) {
            return path.string() + ":" + std::to_string(line_no) + ": " + msg;
        };
        const auto fields = split_csv_line(line);
        if (fields.size() != 7)
            throw ParseError(at("expected 7 fields, got " + std::to_string(fields.size())));
        Detection d;
        d.det_id = fields[0];
        d.position.x = parse_double(fields[1], at("x"));
        d.position.y = parse_double(fields[2], at("y"));
        d.confidence = parse_double(fields[3], at("confidence"));
        d.status = detection_status_from_string(fields[4]);
        d.species = fields[5];
        d.provenance = provenance_from_string(fields[6]);
        try {
            d.validate();
        } catch (const InvariantViolation& e) {
            throw InvariantViolation(at(e.what()));
        }
        dets.push_back(std::move(d));
    }
    check_unique_ids(dets, path.string());
    return dets;
}

void save_detections_csv(const std::vector<Detection>& dets,
                         const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << kDetectionsHeader << "\n";
    for (const auto& d : dets) {
        d.validate();
        out << d.det_id << ',' << format_double(d.position.x) << ','
            << format_double(d.position.y) << ',' << format_double(d.confidence) << ','
            << to_string(d.status) << ',' << d.species << ',' << to_string(d.provenance) << "\n";
    }
    if (!out)
        throw IoError("write failed for " + path.string());
}

} // namespace

std::vector<Detection> load_detections(const std::filesystem::path& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".geojson" || ext == ".json") return load_detections_geojson(path);
    if (ext == ".csv") return load_detections_csv(path);
    throw IoError("load_detections: unsupported extension \"" + ext + "\" for " + path.string() +
                  " (expected .geojson, .json, or .csv)");
}

void save_detections(const std::vector<Detection>& detections,
                     const std::filesystem::path& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".geojson" || ext == ".json") {
        save_detections_geojson(detections, path);
    } else if (ext == ".csv") {
        save_detections_csv(detections, path);
    } else {
        throw IoError("save_detections: unsupported extension \"" + ext + "\" for " +
                      path.string());
    }
}

} // namespace canopy
