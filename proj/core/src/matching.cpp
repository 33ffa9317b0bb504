#include "canopy/matching.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace canopy::matching {

namespace {

// Surrogate cost for infeasible pairs inside the Hungarian solve. Any
// feasible total is far below it (pairs cost < gate_m each), so minimizing
// the surrogate-padded total maximizes cardinality first.
constexpr double kSurrogateCost = 1e6;

void validate_gate(double gate_m) {
    if (!(gate_m > 0.0) || !(gate_m < 1e5))
        throw InvariantViolation("gate_m must lie in (0, 1e5), got " + std::to_string(gate_m));
}

} // namespace

double MatchResult::total_distance() const {
    double total = 0.0;
    for (const auto& p : pairs) total += p.distance_m;
    return total;
}

CostMatrix build_cost_matrix(const std::vector<Detection>& dets,
                             const std::vector<std::pair<std::string, Point>>& trees,
                             double gate_m) {
    validate_gate(gate_m);
    CostMatrix c;
    c.gate_m = gate_m;
    std::set<std::string> seen;
    for (const auto& d : dets) {
        if (!seen.insert(d.det_id).second)
            throw DuplicateId("build_cost_matrix: duplicate det_id " + d.det_id);
        c.det_ids.push_back(d.det_id);
    }
    seen.clear();
    for (const auto& [id, pos] : trees) {
        if (!seen.insert(id).second)
            throw DuplicateId("build_cost_matrix: duplicate tree_id " + id);
        c.tree_ids.push_back(id);
    }
    c.costs.resize(static_cast<size_t>(c.n()) * c.m());
    for (int i = 0; i < c.n(); ++i) {
        for (int j = 0; j < c.m(); ++j) {
            const double d = euclidean_distance(dets[i].position, trees[j].second);
            c.costs[static_cast<size_t>(i) * c.m() + j] = (d < gate_m) ? d : kInfeasible;
        }
    }
    return c;
}

Assignment solve_assignment_indices(const CostMatrix& c) {
    const int n = c.n();
    const int m = c.m();
    Assignment result;
    if (n == 0 || m == 0) return result;

    // Square padding: dummy rows/columns at zero cost, infeasible real pairs
    // at the surrogate. Classic O(dim^3) Hungarian with potentials.
    const int dim = std::max(n, m);
    auto cost = [&](int i, int j) -> double {
        if (i >= n || j >= m) return 0.0;
        const double v = c.at(i, j);
        return (v < c.gate_m) ? v : kSurrogateCost;
    };

    const double inf = std::numeric_limits<double>::max();
    std::vector<double> u(dim + 1, 0.0), v(dim + 1, 0.0);
    std::vector<int> p(dim + 1, 0), way(dim + 1, 0);
    for (int i = 1; i <= dim; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(dim + 1, inf);
        std::vector<char> used(dim + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= dim; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= dim; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> col_of(n, -1);
    for (int j = 1; j <= dim; ++j) {
        const int i = p[j];
        if (i >= 1 && i <= n && j <= m) col_of[i - 1] = j - 1;
    }
    for (int i = 0; i < n; ++i) {
        const int j = col_of[i];
        if (j < 0) continue;
        const double d = c.at(i, j);
        if (d < c.gate_m) { // prune surrogate pairs
            result.pairs.emplace_back(i, j);
            result.total_cost += d;
        }
    }
    return result;
}

MatchResult solve_assignment(const CostMatrix& c) {
    const Assignment a = solve_assignment_indices(c);
    MatchResult r;
    std::vector<char> det_matched(c.n(), 0), tree_matched(c.m(), 0);
    for (const auto& [i, j] : a.pairs) {
        r.pairs.push_back({c.det_ids[i], c.tree_ids[j], c.at(i, j)});
        det_matched[i] = 1;
        tree_matched[j] = 1;
    }
    for (int i = 0; i < c.n(); ++i)
        if (!det_matched[i]) r.unmatched_detections.push_back(c.det_ids[i]);
    for (int j = 0; j < c.m(); ++j)
        if (!tree_matched[j]) r.unmatched_trees.push_back(c.tree_ids[j]);
    return r;
}

ParcelMatchOutput match_against_parcels(const std::vector<Detection>& dets,
                                        const std::vector<Parcel>& parcels, double gate_m) {
    // Nearest containing parcel per detection; ties toward the smaller id.
    std::vector<std::vector<Detection>> per_parcel(parcels.size());
    for (const auto& d : dets) {
        size_t best = parcels.size();
        double best_dist = 0.0;
        for (size_t p = 0; p < parcels.size(); ++p) {
            const double dist = euclidean_distance(d.position, parcels[p].center);
            if (dist > parcels[p].radius) continue;
            if (best == parcels.size() || dist < best_dist ||
                (dist == best_dist && parcels[p].parcel_id < parcels[best].parcel_id)) {
                best = p;
                best_dist = dist;
            }
        }
        if (best < parcels.size()) per_parcel[best].push_back(d);
    }

    ParcelMatchOutput out;
    std::map<std::string, Detection> labeled_by_id;
    std::set<std::string> dropped;
    for (size_t p = 0; p < parcels.size(); ++p) {
        const Parcel& parcel = parcels[p];
        std::vector<std::pair<std::string, Point>> trees;
        trees.reserve(parcel.trees.size());
        for (const auto& t : parcel.trees)
            trees.emplace_back(t.tree_id, tree_world_position(parcel, t));
        const auto match = solve_assignment(build_cost_matrix(per_parcel[p], trees, gate_m));
        for (const auto& pair : match.pairs)
            out.matches.push_back({parcel.parcel_id, pair.det_id, pair.tree_id, pair.distance_m});
        const auto labeled = classify_and_label(parcel, per_parcel[p], match);
        std::set<std::string> kept;
        for (const auto& d : labeled) {
            kept.insert(d.det_id);
            if (d.status == DetectionStatus::verified) ++out.verified;
            if (d.status == DetectionStatus::unverified) ++out.unverified;
            labeled_by_id[d.det_id] = d;
        }
        for (const auto& d : per_parcel[p]) {
            if (!kept.count(d.det_id)) {
                dropped.insert(d.det_id);
                ++out.discarded;
            }
        }
    }

    for (const auto& d : dets) {
        auto it = labeled_by_id.find(d.det_id);
        if (it != labeled_by_id.end()) {
            out.labeled.push_back(it->second);
        } else if (!dropped.count(d.det_id)) {
            out.labeled.push_back(d);
            ++out.outside_parcels;
        }
    }
    return out;
}

std::vector<Detection> classify_and_label(const Parcel& parcel,
                                          const std::vector<Detection>& dets,
                                          const MatchResult& match) {
    parcel.validate();

    std::map<std::string, const Detection*> det_by_id;
    for (const auto& d : dets) {
        if (!det_by_id.emplace(d.det_id, &d).second)
            throw DuplicateId("classify_and_label: duplicate det_id " + d.det_id);
        const double dist = euclidean_distance(d.position, parcel.center);
        if (dist > parcel.radius)
            throw InvariantViolation("classify_and_label: detection " + d.det_id + " lies " +
                                     std::to_string(dist) + " m from parcel " + parcel.parcel_id +
                                     " center, beyond its " + std::to_string(parcel.radius) +
                                     " m radius");
    }
    std::map<std::string, std::string> species_by_tree;
    for (const auto& t : parcel.trees) species_by_tree[t.tree_id] = t.species;

    std::map<std::string, std::string> matched_species; // det_id -> species
    for (const auto& pair : match.pairs) {
        if (!det_by_id.count(pair.det_id))
            throw InvariantViolation("classify_and_label: matched detection " + pair.det_id +
                                     " is not among the parcel's detections");
        auto it = species_by_tree.find(pair.tree_id);
        if (it == species_by_tree.end())
            throw InvariantViolation("classify_and_label: matched tree " + pair.tree_id +
                                     " does not belong to parcel " + parcel.parcel_id);
        matched_species[pair.det_id] = it->second;
    }

    const bool mono = parcel.is_monospecific();
    const std::string parcel_species = mono ? parcel.trees.front().species : std::string();

    std::vector<Detection> out;
    out.reserve(dets.size());
    for (const auto& d : dets) {
        auto it = matched_species.find(d.det_id);
        if (it != matched_species.end()) {
            Detection labeled = d;
            labeled.status = DetectionStatus::verified;
            labeled.species = it->second;
            labeled.provenance = Provenance::verified;
            out.push_back(std::move(labeled));
        } else if (mono) {
            Detection labeled = d;
            labeled.status = DetectionStatus::unverified;
            labeled.species = parcel_species;
            labeled.provenance = Provenance::unverified;
            out.push_back(std::move(labeled));
        }
        // multi-species parcel: unmatched detections are discarded
    }
    return out;
}

} // namespace canopy::matching
