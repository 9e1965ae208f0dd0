#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fragmem/codegraph.hpp"
#include "fragmem/embeddings.hpp"
#include "fragmem/fragments.hpp"

namespace fragmem {

enum class RelationKind { Semantic, ContextStructure, CodeStructure };

/// Cosine returns max(cos, 0) so that larger means more related;
/// OneMinusCosine is the distance form, kept for comparison runs.
enum class SemanticMode { Cosine, OneMinusCosine };

const char* to_string(RelationKind kind);
const char* to_string(SemanticMode mode);
RelationKind relation_kind_from_string(const std::string& name);
SemanticMode semantic_mode_from_string(const std::string& name);

struct RelationSpec {
    RelationKind kind = RelationKind::ContextStructure;
    double w_rel = 0.3;                 // context-structure only
    SemanticMode semantic_mode = SemanticMode::Cosine;
    double sparsity_floor = 1e-4;       // weights below this are not stored

    friend bool operator==(const RelationSpec&, const RelationSpec&) = default;
};

void validate(const RelationSpec& spec);

struct RelationEntry {
    std::size_t i = 0;
    std::size_t j = 0;
    double weight = 0.0;

    friend bool operator==(const RelationEntry&, const RelationEntry&) = default;
};

/// Sparse symmetric matrix without a diagonal. Rows are sorted by column.
class RelationMatrix {
public:
    RelationMatrix() = default;
    explicit RelationMatrix(std::size_t n) : rows_(n) {}

    /// Entries are given once per unordered pair (either orientation) and
    /// mirrored. Diagonal entries and duplicate pairs are rejected.
    static RelationMatrix from_entries(std::size_t n, std::span<const RelationEntry> entries);

    std::size_t n() const { return rows_.size(); }
    std::span<const std::pair<std::size_t, double>> row(std::size_t i) const { return rows_.at(i); }
    /// Upper-triangle entries (i < j), row-major.
    std::vector<RelationEntry> upper_entries() const;
    std::size_t stored_pairs() const;
    /// 0 when absent.
    double weight(std::size_t i, std::size_t j) const;
    double density() const;

    friend bool operator==(const RelationMatrix&, const RelationMatrix&) = default;

private:
    std::vector<std::vector<std::pair<std::size_t, double>>> rows_;
};

double semantic_relation(const EmbeddingVector& a, const EmbeddingVector& b, SemanticMode mode);

/// w_rel^|loc_i - loc_j| with 0^0 = 1.
double context_structure_relation(std::size_t loc_i, std::size_t loc_j, double w_rel);

/// Length-weighted mean of node distances between the two assignments.
double code_structure_relation(const CodeGraph& g, const NodeSpanAssignment& a, const NodeSpanAssignment& b);

RelationMatrix build_context_matrix(std::span<const Fragment> fragments, const RelationSpec& spec);
RelationMatrix build_semantic_matrix(std::span<const EmbeddingVector> embeddings, const RelationSpec& spec);
/// `assignments[i]` belongs to fragment i.
RelationMatrix build_code_matrix(const CodeGraph& g, std::span<const NodeSpanAssignment> assignments,
                                 const RelationSpec& spec);

/// Auxiliary inputs; only the one matching spec.kind is read.
struct RelationInputs {
    std::span<const EmbeddingVector> embeddings;
    const CodeGraph* graph = nullptr;
    std::span<const NodeSpanAssignment> assignments;
};

RelationMatrix build_relation_matrix(std::span<const Fragment> fragments, const RelationSpec& spec,
                                     const RelationInputs& inputs);

} // namespace fragmem
