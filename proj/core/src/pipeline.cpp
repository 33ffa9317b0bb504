#include "canopy/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <json.hpp>

#include "canopy/evaluation.hpp"
#include "canopy/io.hpp"
#include "canopy/matching.hpp"

namespace canopy::pipeline {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kMeanRaster = "mean.tif";
constexpr const char* kDetections = "detections.geojson";
constexpr const char* kLabeled = "labeled.geojson";
constexpr const char* kMatches = "matches.csv";
constexpr const char* kPseudoLabels = "pseudo_labels.csv";
constexpr const char* kManifest = "manifest.csv";
constexpr const char* kStatsJson = "stats.json";
constexpr const char* kStatsText = "stats.txt";
constexpr const char* kRunRecord = "run.json";

void log_line(std::ostream* log, const std::string& msg) {
    if (!log) return;
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    *log << "[" << stamp << "] " << msg << "\n";
}

void write_matches_csv(const std::vector<matching::ParcelMatchRow>& rows,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "parcel_id,det_id,tree_id,distance_m\n";
    for (const auto& row : rows)
        out << row.parcel_id << ',' << row.det_id << ',' << row.tree_id << ','
            << format_double(row.distance_m) << "\n";
    if (!out)
        throw IoError("write failed for " + path.string());
}

} // namespace

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {"ensemble", "peaks",   "match",
                                                   "propagate", "dataset", "stats"};
    return names;
}

RunReport run_pipeline(const PipelineConfig& config, const std::string& resume_from,
                       std::ostream* log) {
    config.validate();

    size_t first_stage = 0;
    const auto& names = stage_names();
    if (!resume_from.empty()) {
        const auto it = std::find(names.begin(), names.end(), resume_from);
        if (it == names.end())
            throw ConfigError("unknown stage \"" + resume_from + "\" (stages: ensemble, peaks, "
                              "match, propagate, dataset, stats)");
        first_stage = static_cast<size_t>(it - names.begin());
    }

    const auto& out_dir = config.output;
    std::filesystem::create_directories(out_dir);
    auto artifact = [&](const char* name) { return out_dir / name; };
    auto require_artifact = [&](const char* name, const std::string& stage) {
        if (!std::filesystem::exists(artifact(name)))
            throw IoError("stage " + stage + ": missing artifact " + artifact(name).string() +
                          " (run the earlier stages first)");
    };

    RunReport report;
    auto run_stage = [&](const char* name, auto&& body) {
        const size_t idx =
            static_cast<size_t>(std::find(names.begin(), names.end(), name) - names.begin());
        if (idx < first_stage) {
            report.skipped_stages.push_back(name);
            log_line(log, std::string("stage ") + name + ": skipped (resume)");
            return;
        }
        try {
            body();
        } catch (const Error& e) {
            throw Error("stage " + std::string(name) + ": " + e.what());
        }
    };

    run_stage("ensemble", [&] {
        std::vector<Raster> inputs;
        inputs.reserve(config.predictions.size());
        for (const auto& p : config.predictions) inputs.push_back(load_raster(p, true));
        const Raster mean = ensemble::average_rasters(inputs, config.threads);
        save_raster(mean, artifact(kMeanRaster));
        report.stage_counts["ensemble"] = {{"inputs", static_cast<long>(inputs.size())},
                                           {"rows", mean.rows()},
                                           {"cols", mean.cols()}};
        log_line(log, "stage ensemble: averaged " + std::to_string(inputs.size()) +
                          " rasters -> " + artifact(kMeanRaster).string());
    });

    run_stage("peaks", [&] {
        require_artifact(kMeanRaster, "peaks");
        const Raster mean = load_raster(artifact(kMeanRaster), true);
        const auto dets = ensemble::extract_peaks(mean, config.peak, config.threads);
        save_detections(dets, artifact(kDetections));
        report.stage_counts["peaks"] = {{"detections", static_cast<long>(dets.size())}};
        log_line(log, "stage peaks: " + std::to_string(dets.size()) + " detections -> " +
                          artifact(kDetections).string());
    });

    run_stage("match", [&] {
        require_artifact(kDetections, "match");
        const auto dets = load_detections(artifact(kDetections));
        const auto parcels = load_parcels(config.parcels);
        const auto out = matching::match_against_parcels(dets, parcels, config.gate_m);
        write_matches_csv(out.matches, artifact(kMatches));
        save_detections(out.labeled, artifact(kLabeled));
        report.stage_counts["match"] = {{"detections", static_cast<long>(dets.size())},
                                        {"parcels", static_cast<long>(parcels.size())},
                                        {"verified", out.verified},
                                        {"unverified", out.unverified},
                                        {"discarded", out.discarded},
                                        {"outside_parcels", out.outside_parcels},
                                        {"matched_trees", static_cast<long>(out.matches.size())}};
        log_line(log, "stage match: " + std::to_string(out.verified) + " verified, " +
                          std::to_string(out.unverified) + " unverified -> " +
                          artifact(kLabeled).string());
    });

    run_stage("propagate", [&] {
        if (!config.has_embeddings()) {
            report.skipped_stages.push_back("propagate");
            log_line(log, "stage propagate: skipped (no embeddings configured)");
            return;
        }
        auto emb = propagation::load_embeddings(config.embeddings);
        const auto pseudo = propagation::propagate(emb, config.propagation);
        propagation::save_pseudo_labels(pseudo, artifact(kPseudoLabels));
        report.stage_counts["propagate"] = {
            {"embeddings", static_cast<long>(emb.size())},
            {"pseudo_labels", static_cast<long>(pseudo.entries.size())}};
        log_line(log, "stage propagate: " + std::to_string(pseudo.entries.size()) +
                          " pseudo-labels -> " + artifact(kPseudoLabels).string());
    });

    run_stage("dataset", [&] {
        require_artifact(kLabeled, "dataset");
        const auto labeled = load_detections(artifact(kLabeled));
        const auto parcels = load_parcels(config.parcels);
        const Raster imagery = load_raster(config.imagery);
        std::optional<propagation::PseudoLabelSet> pseudo;
        if (config.has_embeddings()) {
            require_artifact(kPseudoLabels, "dataset");
            pseudo = propagation::load_pseudo_labels(artifact(kPseudoLabels));
        }
        auto manifest =
            dataset::build_manifest(labeled, pseudo, imagery, parcels, config.patch);
        manifest = dataset::split_manifest(manifest, config.train_fraction, config.seed);
        dataset::save_manifest(manifest, artifact(kManifest));
        const size_t written =
            dataset::write_patches(manifest, labeled, imagery, config.patch, out_dir);
        report.stage_counts["dataset"] = {{"rows", static_cast<long>(manifest.size())},
                                          {"patches", static_cast<long>(written)}};
        log_line(log, "stage dataset: " + std::to_string(manifest.size()) + " rows, " +
                          std::to_string(written) + " patches -> " + artifact(kManifest).string());
    });

    run_stage("stats", [&] {
        require_artifact(kManifest, "stats");
        const auto manifest = dataset::load_manifest(artifact(kManifest));
        const auto parcels = load_parcels(config.parcels);
        const auto stats = dataset::dataset_stats(manifest, parcels);

        std::ofstream text(artifact(kStatsText));
        if (!text)
            throw IoError("cannot write " + artifact(kStatsText).string());
        text << dataset::render_stats(stats);

        ordered_json j;
        j["total"] = stats.total;
        j["verified"] = stats.verified;
        j["verified_fraction"] = stats.verified_fraction;
        j["parcels"] = stats.parcels;
        j["monospecific"] = stats.monospecific;
        j["monospecific_fraction"] = stats.monospecific_fraction;
        j["species_count"] = stats.species_count;
        ordered_json hist = ordered_json::array();
        for (const auto& [species, count] : dataset::species_histogram(manifest))
            hist.push_back({{"species", species}, {"count", count}});
        j["species_histogram"] = std::move(hist);
        std::ofstream json_out(artifact(kStatsJson));
        if (!json_out)
            throw IoError("cannot write " + artifact(kStatsJson).string());
        json_out << j.dump(2) << "\n";

        report.stage_counts["stats"] = {{"total", stats.total}, {"species", stats.species_count}};
        log_line(log, "stage stats: " + std::to_string(stats.total) + " rows -> " +
                          artifact(kStatsJson).string());
    });

    // Run record: config hash, version, per-stage counts. No timestamps, so
    // identical runs produce identical bytes.
    ordered_json run;
    run["config_hash"] = fnv1a_hex(config.raw_text);
#ifdef CANOPY_VERSION
    run["version"] = CANOPY_VERSION;
#else
    run["version"] = "unknown";
#endif
    run["threads"] = config.threads;
    run["resume_from"] = resume_from;
    ordered_json stages;
    for (const auto& name : names) {
        if (report.stage_counts.count(name)) {
            ordered_json counts;
            for (const auto& [k, v] : report.stage_counts.at(name)) counts[k] = v;
            stages[name] = std::move(counts);
        }
    }
    run["stages"] = std::move(stages);
    std::ofstream run_out(artifact(kRunRecord));
    if (!run_out)
        throw IoError("cannot write " + artifact(kRunRecord).string());
    run_out << run.dump(2) << "\n";
    return report;
}

} // namespace canopy::pipeline
