#pragma once

#include <string>
#include <vector>

#include "canopy/types.hpp"

namespace canopy::evaluation {

/// One-to-one agreement between a reference and a candidate point set.
struct AgreementReport {
    long tp = 0;
    long fp = 0; // unmatched candidates
    long fn = 0; // unmatched references
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long count_difference = 0; // candidate - reference
    double avg_match_distance_m = 0.0;
};

/// Builds the derived fields from the counts (0 where denominators vanish).
AgreementReport make_agreement_report(long tp, long fp, long fn, double total_match_distance);

/// Gated 1-to-1 matching between the two point sets; tp = matched pairs,
/// fp = unmatched candidates, fn = unmatched references.
AgreementReport agreement(const std::vector<Point>& reference,
                          const std::vector<Point>& candidate, double gate_m = 4.0);

struct ClassScore {
    std::string species;
    double iou = 0.0;
    double recall = 0.0;
    long support = 0;
};

struct ClassificationReport {
    double oa = 0.0;   // overall accuracy
    double miou = 0.0; // class-averaged IoU over classes present in truth
    double ar = 0.0;   // class-averaged recall
    std::vector<ClassScore> per_class; // sorted by species code
};

/// Confusion-matrix metrics between per-sample species labels. Classes are
/// the distinct species of the truth vector; predicted-only classes count
/// as errors but are not averaged as classes of their own.
ClassificationReport classification_metrics(const std::vector<std::string>& pred,
                                            const std::vector<std::string>& truth);

/// Fixed-width table row: names, signed count difference, F1 x 100 with one
/// decimal, average distance in meters with one decimal and an "m" suffix.
std::string render_report(const AgreementReport& report, const std::string& reference_name,
                          const std::string& candidate_name);

/// Summary row "OA mIoU AR" (x 100, one decimal) plus one line per class.
std::string render_report(const ClassificationReport& report);

} // namespace canopy::evaluation
