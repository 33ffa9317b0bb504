#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "canopy/errors.hpp"

namespace canopy::propagation {

/// Patch embeddings with optional species labels. Vectors are re-normalized
/// to unit L2 norm at ingestion; an empty label string means unlabeled.
struct EmbeddingTable {
    std::vector<std::string> ids;
    int dim = 0;
    std::vector<float> vectors; // ids.size() * dim, row-major
    std::vector<std::string> labels;

    size_t size() const { return ids.size(); }
    const float* vec(size_t i) const { return vectors.data() + i * dim; }
    bool labeled(size_t i) const { return !labels[i].empty(); }

    /// Normalizes every vector in place; throws on zero vectors, duplicate
    /// ids, or size mismatches.
    void normalize_and_validate();
};

struct PropagationConfig {
    int k = 50;                // neighbors per node, clamped to n-1
    double affinity_gamma = 3; // exponent on the clamped cosine similarity
    double alpha = 0.99;       // diffusion coefficient, in (0,1)
    double cg_tol = 1e-6;      // absolute residual tolerance per class column
    int cg_max_iter = 200;

    void validate() const;
};

/// Symmetric sparse matrix in CSR form.
struct SparseMatrix {
    int n = 0;
    std::vector<int> row_ptr; // n+1
    std::vector<int> col;
    std::vector<double> val;

    void multiply(const std::vector<double>& x, std::vector<double>& y) const;
};

/// kNN graph over the embeddings with edge weights max(cosine, 0)^gamma,
/// symmetrized by element-wise maximum, then normalized D^-1/2 W D^-1/2.
/// Isolated nodes keep zero rows. Throws DegenerateInput when n < 2.
SparseMatrix build_graph(const EmbeddingTable& emb, const PropagationConfig& cfg);

struct DiffusionResult {
    std::vector<std::string> classes; // sorted distinct labels
    std::vector<double> scores;       // n x classes.size(), row-major
    int iterations = 0;               // max over class columns
    double residual = 0.0;            // max over class columns

    double score(size_t node, size_t cls) const { return scores[node * classes.size() + cls]; }
};

/// Solves (I - alpha W) Z = Y by conjugate gradient, one class column at a
/// time; Y is one-hot over the labeled rows. Throws NonConvergence with the
/// reached residual when cg_max_iter is exhausted.
DiffusionResult diffuse(const SparseMatrix& w_norm, const std::vector<std::string>& labels,
                        const PropagationConfig& cfg);

struct PseudoLabel {
    std::string id;
    std::string species;
    double certainty = 0.0;    // 1 - H(row)/log(C)
    double class_weight = 1.0; // inverse pseudo-frequency, mean-normalized
};

struct PseudoLabelSet {
    std::vector<PseudoLabel> entries; // unlabeled ids with nonzero scores, input order
    std::vector<std::pair<std::string, double>> class_weights; // per pseudo class
};

/// Argmax species per unlabeled row (ties toward the smallest species code);
/// zero rows emit nothing. Certainty is the normalized-entropy complement of
/// the row-normalized scores.
PseudoLabelSet extract_pseudo_labels(const DiffusionResult& z, const EmbeddingTable& emb);

/// Convenience: build_graph + diffuse + extract_pseudo_labels.
PseudoLabelSet propagate(const EmbeddingTable& emb, const PropagationConfig& cfg);

// Embeddings file, text form: header "id,dim=<D>,label", then one row per
// patch "id,<D floats>,<species|->". Binary form: magic "EMB1" (see
// load_embeddings for the layout). Format auto-detected by the magic.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
void save_embeddings_text(const EmbeddingTable& emb, const std::filesystem::path& path);
void save_embeddings_binary(const EmbeddingTable& emb, const std::filesystem::path& path);

void save_pseudo_labels(const PseudoLabelSet& set, const std::filesystem::path& path);
PseudoLabelSet load_pseudo_labels(const std::filesystem::path& path);

} // namespace canopy::propagation
