#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "canopy/types.hpp"

namespace canopy::matching {

/// Cost value marking a pair beyond the gate.
inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

/// Dense gated cost matrix between detections (rows) and field trees
/// (columns). Finite entries are Euclidean distances strictly below gate_m;
/// everything else is kInfeasible.
struct CostMatrix {
    std::vector<std::string> det_ids;
    std::vector<std::string> tree_ids;
    std::vector<double> costs; // n*m row-major
    double gate_m = 4.0;

    int n() const { return static_cast<int>(det_ids.size()); }
    int m() const { return static_cast<int>(tree_ids.size()); }
    double at(int i, int j) const { return costs[static_cast<size_t>(i) * m() + j]; }
    bool feasible(int i, int j) const { return at(i, j) < gate_m; }
};

struct MatchResult {
    struct Pair {
        std::string det_id;
        std::string tree_id;
        double distance_m = 0.0;
    };
    std::vector<Pair> pairs;                        // ordered by detection index
    std::vector<std::string> unmatched_detections;  // input order
    std::vector<std::string> unmatched_trees;       // input order

    double total_distance() const;
};

/// c_ij = ||det_i - tree_j||_2 when strictly below gate_m, else infeasible.
CostMatrix build_cost_matrix(const std::vector<Detection>& dets,
                             const std::vector<std::pair<std::string, Point>>& trees,
                             double gate_m = 4.0);

/// Index-level assignment: pairs of (detection index, tree index).
struct Assignment {
    std::vector<std::pair<int, int>> pairs; // sorted by detection index
    double total_cost = 0.0;
};

/// Maximum-cardinality assignment over feasible pairs with minimum total
/// distance among those. Deterministic. Implemented as a square Hungarian
/// solve where infeasible pairs carry a large finite surrogate cost and
/// dummy rows/columns cost zero; surrogate pairs are pruned afterwards.
Assignment solve_assignment_indices(const CostMatrix& c);

MatchResult solve_assignment(const CostMatrix& c);

/// Applies the parcel labeling rules to the detections inside one parcel.
/// Matched detections become verified with the matched tree's species. In a
/// monospecific parcel the unmatched remainder is kept as unverified with
/// the parcel species; in a multi-species parcel it is discarded (dropped
/// from the output). Input order is preserved for kept detections.
std::vector<Detection> classify_and_label(const Parcel& parcel,
                                          const std::vector<Detection>& dets,
                                          const MatchResult& match);

/// One matched pair with the parcel it was matched in.
struct ParcelMatchRow {
    std::string parcel_id;
    std::string det_id;
    std::string tree_id;
    double distance_m = 0.0;
};

struct ParcelMatchOutput {
    std::vector<Detection> labeled; // input order; discarded detections dropped
    std::vector<ParcelMatchRow> matches;
    long verified = 0;
    long unverified = 0;
    long discarded = 0;
    long outside_parcels = 0;
};

/// Full matching pass over a scene: each detection is attributed to the
/// nearest parcel whose radius contains it (ties toward the smaller
/// parcel_id), every parcel is solved and labeled independently, and
/// detections outside all parcels pass through untouched as the unlabeled
/// pool.
ParcelMatchOutput match_against_parcels(const std::vector<Detection>& dets,
                                        const std::vector<Parcel>& parcels, double gate_m);

} // namespace canopy::matching
