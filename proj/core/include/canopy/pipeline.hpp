#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "canopy/dataset.hpp"
#include "canopy/ensemble.hpp"
#include "canopy/losses.hpp"
#include "canopy/propagation.hpp"

namespace canopy::pipeline {

/// Run configuration. File form: flat TOML-syntax `key = value` lines with
/// dotted keys (see load_config); relative paths resolve against the config
/// file's directory. Unknown keys are errors.
struct PipelineConfig {
    std::vector<std::filesystem::path> predictions; // paths.predictions
    std::filesystem::path parcels;                  // paths.parcels
    std::filesystem::path imagery;                  // paths.imagery
    std::filesystem::path embeddings;               // paths.embeddings (optional)
    std::filesystem::path output;                   // paths.output

    ensemble::PeakConfig peak;
    double gate_m = 4.0;                // match.gate_m
    losses::HeatmapConfig heatmap;      // heatmap.sigma_m
    losses::LossWeights loss_weights;   // losses.*
    propagation::PropagationConfig propagation; // propagation.*
    dataset::PatchSpec patch;           // dataset.patch_px / dataset.bands
    double train_fraction = 0.8;        // dataset.train_fraction
    uint64_t seed = 42;                 // dataset.seed
    int threads = 1;                    // threads

    std::string raw_text; // config file content, hashed into run.json

    bool has_embeddings() const { return !embeddings.empty(); }

    /// Numeric invariants plus existence of every referenced input file;
    /// ConfigError messages name the offending key.
    void validate() const;
};

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Pipeline stages in execution order.
const std::vector<std::string>& stage_names();

struct RunReport {
    std::map<std::string, std::map<std::string, long>> stage_counts;
    std::vector<std::string> skipped_stages;
};

/// Executes ensemble -> peaks -> match -> [propagate] -> dataset -> stats,
/// writing each stage's artifact under the output directory plus a run.json
/// record. With resume_from set, earlier stages are skipped and their
/// artifacts must already exist. Logs go to `log` as timestamped lines.
RunReport run_pipeline(const PipelineConfig& config, const std::string& resume_from = "",
                       std::ostream* log = nullptr);

/// FNV-1a 64-bit hash, hex-encoded; stable across platforms and runs.
std::string fnv1a_hex(const std::string& data);

} // namespace canopy::pipeline
