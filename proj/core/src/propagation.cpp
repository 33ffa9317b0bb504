#include "canopy/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace canopy::propagation {

void EmbeddingTable::normalize_and_validate() {
    if (dim < 1)
        throw InvariantViolation("EmbeddingTable: dim must be >= 1, got " + std::to_string(dim));
    if (labels.size() != ids.size())
        throw InvariantViolation("EmbeddingTable: " + std::to_string(labels.size()) +
                                 " labels for " + std::to_string(ids.size()) + " ids");
    if (vectors.size() != ids.size() * static_cast<size_t>(dim))
        throw InvariantViolation("EmbeddingTable: vector payload does not match ids*dim");
    std::set<std::string> seen;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (!seen.insert(ids[i]).second)
            throw DuplicateId("EmbeddingTable: duplicate id " + ids[i]);
        float* v = vectors.data() + i * dim;
        double norm_sq = 0.0;
        for (int d = 0; d < dim; ++d) {
            if (!std::isfinite(v[d]))
                throw InvariantViolation("EmbeddingTable: non-finite value in vector " + ids[i]);
            norm_sq += static_cast<double>(v[d]) * v[d];
        }
        const double norm = std::sqrt(norm_sq);
        if (!(norm > 0.0))
            throw InvariantViolation("EmbeddingTable: zero vector for id " + ids[i]);
        for (int d = 0; d < dim; ++d)
            v[d] = static_cast<float>(v[d] / norm);
    }
}

void PropagationConfig::validate() const {
    if (k < 1)
        throw InvariantViolation("PropagationConfig: k must be >= 1, got " + std::to_string(k));
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvariantViolation("PropagationConfig: alpha must lie in (0,1), got " +
                                 std::to_string(alpha));
    if (!(cg_tol > 0.0))
        throw InvariantViolation("PropagationConfig: cg_tol must be positive");
    if (cg_max_iter < 1)
        throw InvariantViolation("PropagationConfig: cg_max_iter must be >= 1");
    if (!(affinity_gamma > 0.0))
        throw InvariantViolation("PropagationConfig: affinity_gamma must be positive");
}

void SparseMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
            acc += val[p] * x[col[p]];
        y[i] = acc;
    }
}

SparseMatrix build_graph(const EmbeddingTable& emb, const PropagationConfig& cfg) {
    cfg.validate();
    const int n = static_cast<int>(emb.size());
    if (n < 2)
        throw DegenerateInput("build_graph: need at least 2 embeddings, got " +
                              std::to_string(n));
    const int k = std::min(cfg.k, n - 1);

    // Exact kNN by cosine similarity (vectors are unit-normalized, so the
    // dot product is the cosine). Ties broken toward the smaller index.
    std::map<std::pair<int, int>, double> edges; // (min,max) -> weight
    std::vector<std::pair<double, int>> sims(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double dot = 0.0;
            const float* a = emb.vec(i);
            const float* b = emb.vec(j);
            for (int d = 0; d < emb.dim; ++d) dot += static_cast<double>(a[d]) * b[d];
            sims[j] = {(i == j) ? -2.0 : dot, j}; // self-edge excluded
        }
        std::partial_sort(sims.begin(), sims.begin() + k, sims.end(),
                          [](const auto& x, const auto& y) {
                              if (x.first != y.first) return x.first > y.first;
                              return x.second < y.second;
                          });
        for (int t = 0; t < k; ++t) {
            const double cosine = sims[t].first;
            const int j = sims[t].second;
            const double w = std::pow(std::max(cosine, 0.0), cfg.affinity_gamma);
            if (w <= 0.0) continue;
            const auto key = std::minmax(i, j);
            auto [it, inserted] = edges.emplace(std::make_pair(key.first, key.second), w);
            if (!inserted) it->second = std::max(it->second, w); // symmetrize by max
        }
    }

    // CSR assembly of the symmetrized graph.
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (const auto& [key, w] : edges) {
        adj[key.first].emplace_back(key.second, w);
        adj[key.second].emplace_back(key.first, w);
    }
    std::vector<double> degree(n, 0.0);
    for (int i = 0; i < n; ++i) {
        std::sort(adj[i].begin(), adj[i].end());
        for (const auto& [j, w] : adj[i]) degree[i] += w;
    }

    SparseMatrix m;
    m.n = n;
    m.row_ptr.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) m.row_ptr[i + 1] = m.row_ptr[i] + static_cast<int>(adj[i].size());
    m.col.resize(m.row_ptr[n]);
    m.val.resize(m.row_ptr[n]);
    for (int i = 0; i < n; ++i) {
        int p = m.row_ptr[i];
        for (const auto& [j, w] : adj[i]) {
            m.col[p] = j;
            // D^-1/2 W D^-1/2; both degrees are positive on any stored edge.
            m.val[p] = w / std::sqrt(degree[i] * degree[j]);
            ++p;
        }
    }
    return m;
}

namespace {

// CG on (I - alpha W) x = b; the operator is SPD because W is symmetric
// with spectral radius <= 1 and alpha < 1.
struct CgOutcome {
    int iterations = 0;
    double residual = 0.0;
};

CgOutcome conjugate_gradient(const SparseMatrix& w, double alpha, const std::vector<double>& b,
                             std::vector<double>& x, double tol, int max_iter) {
    const int n = w.n;
    x.assign(n, 0.0);
    std::vector<double> r = b, p = b, ap(n), wp(n);
    double rs_old = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
    CgOutcome out;
    out.residual = std::sqrt(rs_old);
    if (out.residual <= tol) return out;

    for (int it = 1; it <= max_iter; ++it) {
        w.multiply(p, wp);
        for (int i = 0; i < n; ++i) ap[i] = p[i] - alpha * wp[i];
        const double p_ap = std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
        const double step = rs_old / p_ap;
        for (int i = 0; i < n; ++i) {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        const double rs_new = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
        out.iterations = it;
        out.residual = std::sqrt(rs_new);
        if (out.residual <= tol) return out;
        const double beta = rs_new / rs_old;
        for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rs_old = rs_new;
    }
    throw NonConvergence("diffuse: conjugate gradient reached " + std::to_string(max_iter) +
                         " iterations with residual " + std::to_string(out.residual) +
                         " (tolerance " + std::to_string(tol) + ")");
}

} // namespace

DiffusionResult diffuse(const SparseMatrix& w_norm, const std::vector<std::string>& labels,
                        const PropagationConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(labels.size()) != w_norm.n)
        throw LengthMismatch("diffuse: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(w_norm.n) + " nodes");

    std::set<std::string> class_set;
    for (const auto& l : labels)
        if (!l.empty()) class_set.insert(l);
    if (class_set.empty())
        throw DegenerateInput("diffuse: no labeled nodes");

    DiffusionResult result;
    result.classes.assign(class_set.begin(), class_set.end());
    const size_t n_classes = result.classes.size();
    result.scores.assign(static_cast<size_t>(w_norm.n) * n_classes, 0.0);

    std::vector<double> b(w_norm.n), x;
    for (size_t c = 0; c < n_classes; ++c) {
        for (int i = 0; i < w_norm.n; ++i)
            b[i] = (labels[i] == result.classes[c]) ? 1.0 : 0.0;
        const auto outcome =
            conjugate_gradient(w_norm, cfg.alpha, b, x, cfg.cg_tol, cfg.cg_max_iter);
        result.iterations = std::max(result.iterations, outcome.iterations);
        result.residual = std::max(result.residual, outcome.residual);
        for (int i = 0; i < w_norm.n; ++i)
            result.scores[static_cast<size_t>(i) * n_classes + c] = x[i];
    }
    return result;
}

PseudoLabelSet extract_pseudo_labels(const DiffusionResult& z, const EmbeddingTable& emb) {
    const size_t n_classes = z.classes.size();
    if (z.scores.size() != emb.size() * n_classes)
        throw LengthMismatch("extract_pseudo_labels: score matrix does not match table size");
    for (double s : z.scores)
        if (!std::isfinite(s))
            throw InvariantViolation("extract_pseudo_labels: non-finite score");

    PseudoLabelSet set;
    for (size_t i = 0; i < emb.size(); ++i) {
        if (emb.labeled(i)) continue;
        double row_sum = 0.0;
        size_t best = 0;
        double best_score = -1.0;
        for (size_t c = 0; c < n_classes; ++c) {
            const double s = std::max(z.score(i, c), 0.0);
            row_sum += s;
            if (s > best_score) { // first index wins ties: classes are sorted
                best_score = s;
                best = c;
            }
        }
        if (row_sum <= 0.0) continue; // disconnected node: no pseudo-label

        // certainty = 1 - H(normalized row) / log(C); a single class carries
        // no entropy budget, so certainty is 1 by convention.
        double certainty = 1.0;
        if (n_classes > 1) {
            double entropy = 0.0;
            for (size_t c = 0; c < n_classes; ++c) {
                const double p = std::max(z.score(i, c), 0.0) / row_sum;
                if (p > 0.0) entropy -= p * std::log(p);
            }
            certainty = 1.0 - entropy / std::log(static_cast<double>(n_classes));
            certainty = std::clamp(certainty, 0.0, 1.0);
        }
        set.entries.push_back({emb.ids[i], z.classes[best], certainty, 1.0});
    }

    // Class weights: inverse pseudo-label frequency, normalized to mean 1.
    std::map<std::string, size_t> freq;
    for (const auto& e : set.entries) ++freq[e.species];
    if (!freq.empty()) {
        double inv_sum = 0.0;
        for (const auto& [species, f] : freq) inv_sum += 1.0 / f;
        const double mean_inv = inv_sum / freq.size();
        for (const auto& [species, f] : freq)
            set.class_weights.emplace_back(species, (1.0 / f) / mean_inv);
        std::map<std::string, double> weight_of(set.class_weights.begin(),
                                                set.class_weights.end());
        for (auto& e : set.entries) e.class_weight = weight_of[e.species];
    }
    return set;
}

PseudoLabelSet propagate(const EmbeddingTable& emb, const PropagationConfig& cfg) {
    const auto graph = build_graph(emb, cfg);
    const auto z = diffuse(graph, emb.labels, cfg);
    return extract_pseudo_labels(z, emb);
}

} // namespace canopy::propagation
