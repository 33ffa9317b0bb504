#include "canopy/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "canopy/matching.hpp"

namespace canopy::evaluation {

AgreementReport make_agreement_report(long tp, long fp, long fn, double total_match_distance) {
    AgreementReport r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.precision = (tp + fp > 0) ? static_cast<double>(tp) / (tp + fp) : 0.0;
    r.recall = (tp + fn > 0) ? static_cast<double>(tp) / (tp + fn) : 0.0;
    r.f1 = (r.precision + r.recall > 0.0)
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    r.count_difference = (tp + fp) - (tp + fn);
    r.avg_match_distance_m = (tp > 0) ? total_match_distance / tp : 0.0;
    return r;
}

AgreementReport agreement(const std::vector<Point>& reference,
                          const std::vector<Point>& candidate, double gate_m) {
    // Candidates on the detection side, references on the tree side.
    std::vector<Detection> cand;
    cand.reserve(candidate.size());
    for (size_t i = 0; i < candidate.size(); ++i) {
        Detection d;
        d.det_id = "c" + std::to_string(i);
        d.position = candidate[i];
        cand.push_back(std::move(d));
    }
    std::vector<std::pair<std::string, Point>> ref;
    ref.reserve(reference.size());
    for (size_t j = 0; j < reference.size(); ++j)
        ref.emplace_back("r" + std::to_string(j), reference[j]);

    const auto cost = matching::build_cost_matrix(cand, ref, gate_m);
    const auto solved = matching::solve_assignment_indices(cost);

    const long tp = static_cast<long>(solved.pairs.size());
    const long fp = static_cast<long>(candidate.size()) - tp;
    const long fn = static_cast<long>(reference.size()) - tp;
    return make_agreement_report(tp, fp, fn, solved.total_cost);
}

ClassificationReport classification_metrics(const std::vector<std::string>& pred,
                                            const std::vector<std::string>& truth) {
    if (pred.size() != truth.size())
        throw LengthMismatch("classification_metrics: " + std::to_string(pred.size()) +
                             " predictions vs " + std::to_string(truth.size()) + " truths");
    if (truth.empty())
        throw DegenerateInput("classification_metrics: need at least one sample");

    std::map<std::string, long> tp, fp, fn, support;
    long correct = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
        ++support[truth[i]];
        if (pred[i] == truth[i]) {
            ++correct;
            ++tp[truth[i]];
        } else {
            ++fn[truth[i]];
            ++fp[pred[i]]; // harmless for predicted-only classes: never averaged
        }
    }

    ClassificationReport r;
    r.oa = static_cast<double>(correct) / truth.size();
    double iou_sum = 0.0, recall_sum = 0.0;
    for (const auto& [species, sup] : support) {
        ClassScore s;
        s.species = species;
        s.support = sup;
        const long t = tp[species], p = fp[species], n = fn[species];
        s.iou = (t + p + n > 0) ? static_cast<double>(t) / (t + p + n) : 0.0;
        s.recall = (t + n > 0) ? static_cast<double>(t) / (t + n) : 0.0;
        iou_sum += s.iou;
        recall_sum += s.recall;
        r.per_class.push_back(std::move(s));
    }
    r.miou = iou_sum / r.per_class.size();
    r.ar = recall_sum / r.per_class.size();
    return r;
}

std::string render_report(const AgreementReport& report, const std::string& reference_name,
                          const std::string& candidate_name) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-14s %-14s %10s %6s %s\n", "Reference", "Matched",
                  "Difference", "F1", "Avg. distance");
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-14s %-14s %+10ld %6.1f %.1fm\n", reference_name.c_str(),
                  candidate_name.c_str(), report.count_difference, report.f1 * 100.0,
                  report.avg_match_distance_m);
    out += buf;
    return out;
}

std::string render_report(const ClassificationReport& report) {
    char buf[256];
    std::string out = "OA mIoU AR\n";
    std::snprintf(buf, sizeof(buf), "%.1f %.1f %.1f\n", report.oa * 100.0, report.miou * 100.0,
                  report.ar * 100.0);
    out += buf;
    for (const auto& c : report.per_class) {
        std::snprintf(buf, sizeof(buf), "%s iou=%.1f recall=%.1f support=%ld\n",
                      c.species.c_str(), c.iou * 100.0, c.recall * 100.0, c.support);
        out += buf;
    }
    return out;
}

} // namespace canopy::evaluation
