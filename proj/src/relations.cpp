#include "fragmem/relations.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "fragmem/error.hpp"
#include "parallel.hpp"

namespace fragmem {

const char* to_string(RelationKind kind) {
    switch (kind) {
    case RelationKind::Semantic: return "semantic";
    case RelationKind::ContextStructure: return "context";
    case RelationKind::CodeStructure: return "code";
    }
    return "unknown";
}

const char* to_string(SemanticMode mode) {
    return mode == SemanticMode::Cosine ? "cosine" : "one-minus-cosine";
}

RelationKind relation_kind_from_string(const std::string& name) {
    if (name == "semantic") return RelationKind::Semantic;
    if (name == "context" || name == "context-structure") return RelationKind::ContextStructure;
    if (name == "code" || name == "code-structure") return RelationKind::CodeStructure;
    throw ConfigError("unknown relation kind '" + name + "' (expected semantic, context or code)");
}

SemanticMode semantic_mode_from_string(const std::string& name) {
    if (name == "cosine") return SemanticMode::Cosine;
    if (name == "one-minus-cosine") return SemanticMode::OneMinusCosine;
    throw ConfigError("unknown semantic mode '" + name + "' (expected cosine or one-minus-cosine)");
}

void validate(const RelationSpec& spec) {
    if (!(spec.w_rel >= 0.0 && spec.w_rel <= 1.0)) {
        throw ConfigError("w_rel must lie in [0, 1]");
    }
    if (!(spec.sparsity_floor >= 0.0)) {
        throw ConfigError("sparsity floor must be >= 0");
    }
}

RelationMatrix RelationMatrix::from_entries(std::size_t n, std::span<const RelationEntry> entries) {
    RelationMatrix m(n);
    for (const auto& e : entries) {
        if (e.i >= n || e.j >= n) {
            throw MatrixContractError("relation entry (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                                      ") outside an " + std::to_string(n) + "-fragment matrix");
        }
        if (e.i == e.j) {
            throw MatrixContractError("relation matrix cannot hold diagonal entry " + std::to_string(e.i));
        }
        m.rows_[e.i].emplace_back(e.j, e.weight);
        m.rows_[e.j].emplace_back(e.i, e.weight);
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto& row = m.rows_[i];
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        const auto dup = std::adjacent_find(row.begin(), row.end(),
                                            [](const auto& a, const auto& b) { return a.first == b.first; });
        if (dup != row.end()) {
            throw MatrixContractError("duplicate relation entry (" + std::to_string(i) + ", " +
                                      std::to_string(dup->first) + ")");
        }
    }
    return m;
}

std::vector<RelationEntry> RelationMatrix::upper_entries() const {
    std::vector<RelationEntry> out;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        for (const auto& [j, w] : rows_[i]) {
            if (j > i) out.push_back({i, j, w});
        }
    }
    return out;
}

std::size_t RelationMatrix::stored_pairs() const {
    std::size_t total = 0;
    for (const auto& row : rows_) total += row.size();
    return total / 2;
}

double RelationMatrix::weight(std::size_t i, std::size_t j) const {
    const auto& r = rows_.at(i);
    const auto it = std::lower_bound(r.begin(), r.end(), j, [](const auto& e, std::size_t col) { return e.first < col; });
    return it != r.end() && it->first == j ? it->second : 0.0;
}

double RelationMatrix::density() const {
    const double n = static_cast<double>(rows_.size());
    return n < 2 ? 0.0 : static_cast<double>(stored_pairs()) / (n * (n - 1.0) / 2.0);
}

double semantic_relation(const EmbeddingVector& a, const EmbeddingVector& b, SemanticMode mode) {
    const double c = cosine_similarity(a, b);
    return mode == SemanticMode::OneMinusCosine ? 1.0 - c : std::max(c, 0.0);
}

double context_structure_relation(std::size_t loc_i, std::size_t loc_j, double w_rel) {
    const std::size_t d = loc_i > loc_j ? loc_i - loc_j : loc_j - loc_i;
    if (d == 0) {
        return 1.0;
    }
    return std::pow(w_rel, static_cast<double>(d));
}

namespace {

// Shared by the pairwise function and the matrix builder so both agree bit-for-bit.
template <typename DistanceFn>
double length_weighted_distance(const NodeSpanAssignment& a, const NodeSpanAssignment& b, DistanceFn&& dis) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& k : a.nodes) {
        for (const auto& l : b.nodes) {
            const double kernel = static_cast<double>(k.len) * static_cast<double>(l.len);
            num += kernel * dis(k.node, l.node);
            den += kernel;
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

void require_assigned(const NodeSpanAssignment& a) {
    if (a.nodes.empty()) {
        throw FragmentUnmappedError("fragment " + std::to_string(a.fragment_id) + " has no assigned graph nodes");
    }
}

bool keep(double w, const RelationSpec& spec) {
    return w > 0.0 && w >= spec.sparsity_floor;
}

template <typename Fn>
auto with_pair_context(std::size_t i, std::size_t j, Fn&& fn) {
    const auto where = " [fragments " + std::to_string(i) + ", " + std::to_string(j) + "]";
    try {
        return fn();
    } catch (const ZeroNormError& e) {
        throw ZeroNormError(e.what() + where);
    } catch (const DimensionError& e) {
        throw DimensionError(e.what() + where);
    } catch (const FragmentUnmappedError& e) {
        throw FragmentUnmappedError(e.what() + where);
    }
}

RelationMatrix merge_rows(std::size_t n, std::vector<std::vector<RelationEntry>>& rows) {
    std::vector<RelationEntry> all;
    for (auto& r : rows) {
        all.insert(all.end(), r.begin(), r.end());
    }
    return RelationMatrix::from_entries(n, all);
}

} // namespace

double code_structure_relation(const CodeGraph& g, const NodeSpanAssignment& a, const NodeSpanAssignment& b) {
    require_assigned(a);
    require_assigned(b);
    std::unordered_map<NodeId, std::vector<double>> rows;
    for (const auto& k : a.nodes) {
        if (!rows.contains(k.node)) rows.emplace(k.node, node_distances_from(g, k.node));
    }
    return length_weighted_distance(a, b, [&](NodeId x, NodeId y) {
        g.node(y);
        return x == y ? 1.0 : rows.at(x)[y];
    });
}

RelationMatrix build_context_matrix(std::span<const Fragment> fragments, const RelationSpec& spec) {
    validate(spec);
    const std::size_t n = fragments.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fragments[a].loc < fragments[b].loc; });

    std::vector<RelationEntry> entries;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            const std::size_t i = order[p];
            const std::size_t j = order[q];
            const double w = context_structure_relation(fragments[i].loc, fragments[j].loc, spec.w_rel);
            // locs ascend along `order`, so weights only shrink from here on
            if (!keep(w, spec)) break;
            entries.push_back({std::min(i, j), std::max(i, j), w});
        }
    }
    return RelationMatrix::from_entries(n, entries);
}

RelationMatrix build_semantic_matrix(std::span<const EmbeddingVector> embeddings, const RelationSpec& spec) {
    validate(spec);
    const std::size_t n = embeddings.size();
    std::vector<std::vector<RelationEntry>> rows(n);
    detail::parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = with_pair_context(
                i, j, [&] { return semantic_relation(embeddings[i], embeddings[j], spec.semantic_mode); });
            if (keep(w, spec)) rows[i].push_back({i, j, w});
        }
    });
    return merge_rows(n, rows);
}

RelationMatrix build_code_matrix(const CodeGraph& g, std::span<const NodeSpanAssignment> assignments,
                                 const RelationSpec& spec) {
    validate(spec);
    const std::size_t n = assignments.size();
    for (const auto& a : assignments) {
        require_assigned(a);
    }
    // distance rows restricted to nodes that occur in some assignment
    std::vector<NodeId> targets;
    for (const auto& a : assignments) {
        for (const auto& o : a.nodes) targets.push_back(g.node(o.node).id);
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    std::unordered_map<NodeId, std::size_t> slot;
    for (std::size_t t = 0; t < targets.size(); ++t) slot.emplace(targets[t], t);

    std::vector<std::vector<double>> dist(targets.size());
    detail::parallel_for(targets.size(), [&](std::size_t s) {
        const auto full = node_distances_from(g, targets[s]);
        auto& row = dist[s];
        row.resize(targets.size());
        for (std::size_t t = 0; t < targets.size(); ++t) row[t] = full[targets[t]];
    });
    const auto lookup = [&](NodeId x, NodeId y) { return x == y ? 1.0 : dist[slot.at(x)][slot.at(y)]; };

    std::vector<std::vector<RelationEntry>> rows(n);
    detail::parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = length_weighted_distance(assignments[i], assignments[j], lookup);
            if (keep(w, spec)) rows[i].push_back({i, j, w});
        }
    });
    return merge_rows(n, rows);
}

RelationMatrix build_relation_matrix(std::span<const Fragment> fragments, const RelationSpec& spec,
                                     const RelationInputs& inputs) {
    switch (spec.kind) {
    case RelationKind::ContextStructure:
        return build_context_matrix(fragments, spec);
    case RelationKind::Semantic:
        if (inputs.embeddings.size() != fragments.size()) {
            throw ConfigError("semantic relation needs one embedding per fragment (" +
                              std::to_string(inputs.embeddings.size()) + " for " + std::to_string(fragments.size()) +
                              ")");
        }
        return build_semantic_matrix(inputs.embeddings, spec);
    case RelationKind::CodeStructure:
        if (inputs.graph == nullptr || inputs.assignments.size() != fragments.size()) {
            throw ConfigError("code-structure relation needs a code graph and one node assignment per fragment");
        }
        return build_code_matrix(*inputs.graph, inputs.assignments, spec);
    }
    throw ConfigError("unknown relation kind");
}

} // namespace fragmem
