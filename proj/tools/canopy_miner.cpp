// canopy-miner: batch pipeline turning tree-detection prediction rasters and
// forest-inventory plot tables into a labeled individual-tree dataset.
//
// Exit codes: 0 success, 1 data/processing error, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "canopy/dataset.hpp"
#include "canopy/ensemble.hpp"
#include "canopy/evaluation.hpp"
#include "canopy/io.hpp"
#include "canopy/losses.hpp"
#include "canopy/matching.hpp"
#include "canopy/pipeline.hpp"
#include "canopy/propagation.hpp"
#include "canopy/types.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<std::string> load_species_column(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw canopy::IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw canopy::ParseError(path.string() + ": empty file (expected header \"species\")");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "species")
        throw canopy::ParseError(path.string() + ":1: bad header, expected \"species\"");
    std::vector<std::string> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

canopy::losses::LossWeights parse_weights(const std::vector<std::string>& kvs) {
    canopy::losses::LossWeights w;
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw canopy::ConfigError("--weights: expected k=v, got \"" + kv + "\"");
        const std::string key = kv.substr(0, eq);
        const double value = canopy::parse_double(kv.substr(eq + 1), "--weights " + key);
        if (key == "w_tversky") {
            w.w_tversky = value;
        } else if (key == "w_focal") {
            w.w_focal = value;
        } else if (key == "alpha") {
            w.tversky_alpha = value;
        } else if (key == "beta") {
            w.tversky_beta = value;
        } else if (key == "gamma") {
            w.focal_gamma = value;
        } else if (key == "epsilon") {
            w.epsilon = value;
        } else {
            throw canopy::ConfigError("--weights: unknown key \"" + key +
                                      "\" (w_tversky, w_focal, alpha, beta, gamma, epsilon)");
        }
    }
    w.validate();
    return w;
}

std::vector<canopy::Point> positions_of(const std::vector<canopy::Detection>& dets) {
    std::vector<canopy::Point> out;
    out.reserve(dets.size());
    for (const auto& d : dets) out.push_back(d.position);
    return out;
}

ordered_json agreement_json(const canopy::evaluation::AgreementReport& r) {
    ordered_json j;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["count_difference"] = r.count_difference;
    j["avg_match_distance_m"] = r.avg_match_distance_m;
    return j;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"canopy-miner: mine individual-tree species labels by matching "
                 "detection heatmap peaks with forest-inventory plots"};
    app.require_subcommand(1);

    // --- render-target ------------------------------------------------------
    auto* cmd_render = app.add_subcommand(
        "render-target", "Render a Gaussian target heatmap from point positions");
    std::string rt_parcels, rt_points, rt_like, rt_out;
    double rt_sigma = 1.5, rt_trunc = 3.0;
    double rt_origin_x = 0, rt_origin_y = 0, rt_gsd = 0.2;
    int rt_rows = 0, rt_cols = 0;
    cmd_render->add_option("--parcels", rt_parcels, "Parcels CSV; renders all tree positions");
    cmd_render->add_option("--points", rt_points, "Detections file; renders their positions");
    cmd_render->add_option("--like", rt_like, "Raster whose grid to reuse");
    cmd_render->add_option("--origin-x", rt_origin_x, "Grid origin x (top-left corner)");
    cmd_render->add_option("--origin-y", rt_origin_y, "Grid origin y (top-left corner)");
    cmd_render->add_option("--gsd", rt_gsd, "Meters per pixel")->capture_default_str();
    cmd_render->add_option("--rows", rt_rows, "Grid rows");
    cmd_render->add_option("--cols", rt_cols, "Grid cols");
    cmd_render->add_option("--sigma-m", rt_sigma, "Gaussian sigma in meters")
        ->capture_default_str();
    cmd_render->add_option("--truncation", rt_trunc, "Kernel cutoff in multiples of sigma")
        ->capture_default_str();
    cmd_render->add_option("--out", rt_out, "Output raster (.tif or .asc)")->required();

    // --- ensemble -----------------------------------------------------------
    auto* cmd_ensemble =
        app.add_subcommand("ensemble", "Average prediction rasters pixel-wise");
    std::string en_out;
    std::vector<std::string> en_inputs;
    int en_threads = 1;
    cmd_ensemble->add_option("--out", en_out, "Output mean raster")->required();
    cmd_ensemble->add_option("rasters", en_inputs, "Input prediction rasters")->required();
    cmd_ensemble->add_option("--threads", en_threads, "Worker threads")->capture_default_str();

    // --- peaks ---------------------------------------------------------------
    auto* cmd_peaks = app.add_subcommand("peaks", "Extract detections as heatmap local maxima");
    std::string pk_in, pk_out;
    canopy::ensemble::PeakConfig pk_cfg;
    int pk_threads = 1;
    cmd_peaks->add_option("--in", pk_in, "Input heatmap raster")->required();
    cmd_peaks->add_option("--kernel-m", pk_cfg.kernel_m, "Window side in meters (default 2.0)")
        ->capture_default_str();
    cmd_peaks
        ->add_option("--threshold", pk_cfg.threshold, "Minimum peak confidence (default 0.25)")
        ->capture_default_str();
    cmd_peaks->add_option("--out", pk_out, "Output detections (.geojson or .csv)")->required();
    cmd_peaks->add_option("--threads", pk_threads, "Worker threads")->capture_default_str();

    // --- match ---------------------------------------------------------------
    auto* cmd_match = app.add_subcommand(
        "match", "Gated 1-to-1 matching of detections against parcel trees, then labeling");
    std::string ma_parcels, ma_dets, ma_out, ma_matches;
    double ma_gate = 4.0;
    cmd_match->add_option("--parcels", ma_parcels, "Parcels CSV")->required();
    cmd_match->add_option("--detections", ma_dets, "Detections file")->required();
    cmd_match->add_option("--gate-m", ma_gate, "Matching gate in meters (default 4.0)")
        ->capture_default_str();
    cmd_match->add_option("--out", ma_out, "Labeled detections output")->required();
    cmd_match->add_option("--matches", ma_matches, "Matched pairs CSV output");

    // --- evaluate -------------------------------------------------------------
    auto* cmd_eval =
        app.add_subcommand("evaluate", "One-to-one agreement metrics between two point sets");
    std::string ev_ref, ev_cand, ev_ref_name, ev_cand_name;
    double ev_gate = 4.0;
    bool ev_json = false;
    cmd_eval->add_option("--reference", ev_ref, "Reference detections file")->required();
    cmd_eval->add_option("--candidate", ev_cand, "Candidate detections file")->required();
    cmd_eval->add_option("--gate-m", ev_gate, "Matching gate in meters (default 4.0)")
        ->capture_default_str();
    cmd_eval->add_option("--reference-name", ev_ref_name, "Row label for the reference");
    cmd_eval->add_option("--candidate-name", ev_cand_name, "Row label for the candidate");
    cmd_eval->add_flag("--json", ev_json, "Machine-readable output");

    // --- class-metrics ----------------------------------------------------------
    auto* cmd_cls = app.add_subcommand(
        "class-metrics", "Classification metrics between per-sample species labels");
    std::string cl_pred, cl_truth;
    bool cl_json = false;
    cmd_cls->add_option("--pred", cl_pred, "Predicted labels CSV (header: species)")->required();
    cmd_cls->add_option("--truth", cl_truth, "True labels CSV (header: species)")->required();
    cmd_cls->add_flag("--json", cl_json, "Machine-readable output");

    // --- loss --------------------------------------------------------------------
    auto* cmd_loss =
        app.add_subcommand("loss", "Segmentation/heatmap losses between two rasters");
    std::string lo_pred, lo_target;
    std::vector<std::string> lo_weights;
    cmd_loss->add_option("--pred", lo_pred, "Prediction raster, values in [0,1]")->required();
    cmd_loss->add_option("--target", lo_target, "Target raster, values in [0,1]")->required();
    cmd_loss->add_option("--weights", lo_weights,
                         "k=v list: w_tversky (default 0.6), w_focal (0.4), alpha (0.3), "
                         "beta (0.7), gamma (2.0), epsilon (1e-7)")
        ->delimiter(',');

    // --- propagate ------------------------------------------------------------------
    auto* cmd_prop = app.add_subcommand(
        "propagate", "Graph label propagation producing pseudo-labels from embeddings");
    std::string pr_emb, pr_out;
    canopy::propagation::PropagationConfig pr_cfg;
    cmd_prop->add_option("--embeddings", pr_emb, "Embeddings file (text or EMB1 binary)")
        ->required();
    cmd_prop->add_option("--k", pr_cfg.k, "Neighbors per node (default 50)")
        ->capture_default_str();
    cmd_prop->add_option("--alpha", pr_cfg.alpha, "Diffusion coefficient (default 0.99)")
        ->capture_default_str();
    cmd_prop->add_option("--gamma", pr_cfg.affinity_gamma, "Affinity exponent (default 3)")
        ->capture_default_str();
    cmd_prop->add_option("--tol", pr_cfg.cg_tol, "Solver residual tolerance (default 1e-6)")
        ->capture_default_str();
    cmd_prop->add_option("--max-iter", pr_cfg.cg_max_iter, "Solver iteration cap (default 200)")
        ->capture_default_str();
    cmd_prop->add_option("--out", pr_out, "Output pseudo_labels.csv")->required();

    // --- patches ------------------------------------------------------------------
    auto* cmd_patches = app.add_subcommand(
        "patches", "Extract training patches and write the dataset manifest");
    std::string pa_dets, pa_imagery, pa_parcels, pa_pseudo, pa_out_dir;
    canopy::dataset::PatchSpec pa_spec;
    cmd_patches->add_option("--detections", pa_dets, "Labeled detections file")->required();
    cmd_patches->add_option("--imagery", pa_imagery, "Imagery raster")->required();
    cmd_patches->add_option("--parcels", pa_parcels, "Parcels CSV (for parcel attribution)");
    cmd_patches->add_option("--pseudo", pa_pseudo, "pseudo_labels.csv from propagate");
    cmd_patches->add_option("--patch-px", pa_spec.size_px, "Patch side in pixels (default 64)")
        ->capture_default_str();
    cmd_patches->add_option("--bands", pa_spec.bands, "Expected imagery bands (default 4)")
        ->capture_default_str();
    cmd_patches->add_option("--out-dir", pa_out_dir, "Output dataset directory")->required();

    // --- stats ----------------------------------------------------------------------
    auto* cmd_stats = app.add_subcommand("stats", "Dataset summary statistics");
    std::string st_manifest, st_parcels;
    bool st_json = false;
    long st_min_count = 0;
    cmd_stats->add_option("--manifest", st_manifest, "Manifest CSV")->required();
    cmd_stats->add_option("--parcels", st_parcels, "Parcels CSV");
    cmd_stats->add_option("--min-count", st_min_count,
                          "Histogram keeps species with more individuals than this")
        ->capture_default_str();
    cmd_stats->add_flag("--json", st_json, "Machine-readable output");

    // --- split -----------------------------------------------------------------------
    auto* cmd_split = app.add_subcommand("split", "Assign grouped train/val splits");
    std::string sp_manifest, sp_out;
    double sp_fraction = 0.8;
    uint64_t sp_seed = 42;
    cmd_split->add_option("--manifest", sp_manifest, "Manifest CSV")->required();
    cmd_split->add_option("--train-fraction", sp_fraction, "Train fraction (default 0.8)")
        ->capture_default_str();
    cmd_split->add_option("--seed", sp_seed, "Shuffle seed (splitmix64)")->capture_default_str();
    cmd_split->add_option("--out", sp_out, "Output manifest CSV")->required();

    // --- pipeline ----------------------------------------------------------------------
    auto* cmd_pipeline =
        app.add_subcommand("pipeline", "Run the full pipeline from a config file");
    std::string pl_config, pl_resume;
    int pl_threads = 0;
    cmd_pipeline->add_option("--config", pl_config, "Flat TOML-style config file")->required();
    cmd_pipeline->add_option("--resume-from", pl_resume,
                             "Skip earlier stages (ensemble, peaks, match, propagate, "
                             "dataset, stats)");
    cmd_pipeline->add_option("--threads", pl_threads, "Override the config's thread cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_render->parsed()) {
            std::vector<canopy::Point> points;
            if (!rt_parcels.empty()) {
                for (const auto& parcel : canopy::load_parcels(rt_parcels))
                    for (const auto& tree : parcel.trees)
                        points.push_back(canopy::tree_world_position(parcel, tree));
            } else if (!rt_points.empty()) {
                points = positions_of(canopy::load_detections(rt_points));
            } else {
                throw canopy::ConfigError("render-target: need --parcels or --points");
            }
            canopy::WorldTransform t;
            if (!rt_like.empty()) {
                t = canopy::load_raster(rt_like).transform;
            } else {
                if (rt_rows < 1 || rt_cols < 1)
                    throw canopy::ConfigError(
                        "render-target: need --like or --origin-x/--origin-y/--gsd/--rows/--cols");
                t = {rt_origin_x, rt_origin_y, rt_gsd, rt_rows, rt_cols};
            }
            canopy::losses::HeatmapConfig cfg{rt_sigma, rt_trunc};
            canopy::save_raster(canopy::losses::render_target(points, t, cfg), rt_out);
            std::cout << "rendered " << points.size() << " kernels -> " << rt_out << "\n";
        } else if (cmd_ensemble->parsed()) {
            std::vector<canopy::Raster> inputs;
            inputs.reserve(en_inputs.size());
            for (const auto& p : en_inputs) inputs.push_back(canopy::load_raster(p, true));
            canopy::save_raster(canopy::ensemble::average_rasters(inputs, en_threads), en_out);
            std::cout << "averaged " << inputs.size() << " rasters -> " << en_out << "\n";
        } else if (cmd_peaks->parsed()) {
            const auto heat = canopy::load_raster(pk_in, true);
            const auto dets = canopy::ensemble::extract_peaks(heat, pk_cfg, pk_threads);
            canopy::save_detections(dets, pk_out);
            std::cout << dets.size() << " detections -> " << pk_out << "\n";
        } else if (cmd_match->parsed()) {
            const auto dets = canopy::load_detections(ma_dets);
            const auto parcels = canopy::load_parcels(ma_parcels);
            const auto out = canopy::matching::match_against_parcels(dets, parcels, ma_gate);
            if (!ma_matches.empty()) {
                std::ofstream matches(ma_matches);
                if (!matches)
                    throw canopy::IoError("cannot write " + ma_matches);
                matches << "parcel_id,det_id,tree_id,distance_m\n";
                for (const auto& row : out.matches)
                    matches << row.parcel_id << ',' << row.det_id << ',' << row.tree_id << ','
                            << canopy::format_double(row.distance_m) << "\n";
            }
            canopy::save_detections(out.labeled, ma_out);
            std::cout << out.verified << " verified, " << out.unverified << " unverified, "
                      << out.discarded << " discarded -> " << ma_out << "\n";
        } else if (cmd_eval->parsed()) {
            const auto ref = canopy::load_detections(ev_ref);
            const auto cand = canopy::load_detections(ev_cand);
            const auto report =
                canopy::evaluation::agreement(positions_of(ref), positions_of(cand), ev_gate);
            if (ev_json) {
                std::cout << agreement_json(report).dump(2) << "\n";
            } else {
                const std::string rn =
                    ev_ref_name.empty() ? fs::path(ev_ref).stem().string() : ev_ref_name;
                const std::string cn =
                    ev_cand_name.empty() ? fs::path(ev_cand).stem().string() : ev_cand_name;
                std::cout << canopy::evaluation::render_report(report, rn, cn);
            }
        } else if (cmd_cls->parsed()) {
            const auto pred = load_species_column(cl_pred);
            const auto truth = load_species_column(cl_truth);
            const auto report = canopy::evaluation::classification_metrics(pred, truth);
            if (cl_json) {
                ordered_json j;
                j["oa"] = report.oa;
                j["miou"] = report.miou;
                j["ar"] = report.ar;
                ordered_json classes = ordered_json::array();
                for (const auto& c : report.per_class)
                    classes.push_back({{"species", c.species},
                                       {"iou", c.iou},
                                       {"recall", c.recall},
                                       {"support", c.support}});
                j["per_class"] = std::move(classes);
                std::cout << j.dump(2) << "\n";
            } else {
                std::cout << canopy::evaluation::render_report(report);
            }
        } else if (cmd_loss->parsed()) {
            const auto pred = canopy::load_raster(lo_pred, true);
            const auto target = canopy::load_raster(lo_target, true);
            const auto w = parse_weights(lo_weights);
            ordered_json j;
            j["tversky"] = canopy::losses::tversky_loss(pred, target, w);
            j["focal"] = canopy::losses::focal_loss(pred, target, w.focal_gamma, w.epsilon);
            j["combined"] = canopy::losses::combined_seg_loss(pred, target, w);
            j["heatmap_mse"] = canopy::losses::heatmap_loss(pred, target);
            std::cout << j.dump(2) << "\n";
        } else if (cmd_prop->parsed()) {
            auto emb = canopy::propagation::load_embeddings(pr_emb);
            const auto pseudo = canopy::propagation::propagate(emb, pr_cfg);
            canopy::propagation::save_pseudo_labels(pseudo, pr_out);
            std::cout << pseudo.entries.size() << " pseudo-labels -> " << pr_out << "\n";
        } else if (cmd_patches->parsed()) {
            const auto dets = canopy::load_detections(pa_dets);
            const auto imagery = canopy::load_raster(pa_imagery);
            std::vector<canopy::Parcel> parcels;
            if (!pa_parcels.empty()) parcels = canopy::load_parcels(pa_parcels);
            std::optional<canopy::propagation::PseudoLabelSet> pseudo;
            if (!pa_pseudo.empty()) pseudo = canopy::propagation::load_pseudo_labels(pa_pseudo);
            const auto manifest =
                canopy::dataset::build_manifest(dets, pseudo, imagery, parcels, pa_spec);
            fs::create_directories(pa_out_dir);
            canopy::dataset::save_manifest(manifest, fs::path(pa_out_dir) / "manifest.csv");
            const size_t written =
                canopy::dataset::write_patches(manifest, dets, imagery, pa_spec, pa_out_dir);
            std::cout << manifest.size() << " manifest rows, " << written << " patches -> "
                      << pa_out_dir << "\n";
        } else if (cmd_stats->parsed()) {
            const auto manifest = canopy::dataset::load_manifest(st_manifest);
            std::vector<canopy::Parcel> parcels;
            if (!st_parcels.empty()) parcels = canopy::load_parcels(st_parcels);
            const auto stats = canopy::dataset::dataset_stats(manifest, parcels);
            if (st_json) {
                ordered_json j;
                j["total"] = stats.total;
                j["verified"] = stats.verified;
                j["verified_fraction"] = stats.verified_fraction;
                j["parcels"] = stats.parcels;
                j["monospecific"] = stats.monospecific;
                j["monospecific_fraction"] = stats.monospecific_fraction;
                j["species_count"] = stats.species_count;
                ordered_json hist = ordered_json::array();
                for (const auto& [species, count] :
                     canopy::dataset::species_histogram(manifest, st_min_count))
                    hist.push_back({{"species", species}, {"count", count}});
                j["species_histogram"] = std::move(hist);
                std::cout << j.dump(2) << "\n";
            } else {
                std::cout << canopy::dataset::render_stats(stats);
                for (const auto& [species, count] :
                     canopy::dataset::species_histogram(manifest, st_min_count))
                    std::cout << species << ": " << count << "\n";
            }
        } else if (cmd_split->parsed()) {
            const auto manifest = canopy::dataset::load_manifest(sp_manifest);
            const auto split = canopy::dataset::split_manifest(manifest, sp_fraction, sp_seed);
            canopy::dataset::save_manifest(split, sp_out);
            long train = 0, val = 0;
            for (const auto& row : split) {
                if (row.split == canopy::dataset::Split::train) ++train;
                if (row.split == canopy::dataset::Split::val) ++val;
            }
            std::cout << train << " train / " << val << " val -> " << sp_out << "\n";
        } else if (cmd_pipeline->parsed()) {
            auto config = canopy::pipeline::load_config(pl_config);
            if (pl_threads > 0) config.threads = pl_threads;
            canopy::pipeline::run_pipeline(config, pl_resume, &std::cerr);
        }
    } catch (const canopy::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
