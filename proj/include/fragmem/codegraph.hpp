#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fragmem/fragments.hpp"

namespace fragmem {

using NodeId = std::size_t;

enum class NodeKind { Syntax, File, Directory };
enum class EdgeKind { SyntaxTree, DirTree, FileRootLink, Call };

const char* to_string(NodeKind kind);
const char* to_string(EdgeKind kind);
NodeKind node_kind_from_string(const std::string& name);
EdgeKind edge_kind_from_string(const std::string& name);

/// Fixed weight per edge type: syntax 0.5, directory 0.3, root link 1.0, call 0.8.
double edge_weight(EdgeKind kind);

struct CodeNode {
    NodeId id = 0;
    NodeKind kind = NodeKind::Syntax;
    std::string syntax_kind;  // syntax nodes only
    std::string name;         // definitions and calls
    std::string path;         // directories use "" for the repository root
    std::optional<Range> byte_span;
    std::size_t text_length = 0;
    std::optional<NodeId> parent;  // syntax-tree parent, syntax nodes only

    friend bool operator==(const CodeNode&, const CodeNode&) = default;
};

struct CodeEdge {
    NodeId a = 0;
    NodeId b = 0;
    double weight = 0.0;
    EdgeKind kind = EdgeKind::SyntaxTree;

    friend bool operator==(const CodeEdge&, const CodeEdge&) = default;
};

struct GraphDiagnostics {
    std::vector<std::string> unparsed_files;  // "path: reason"
    std::size_t unresolved_calls = 0;
    std::map<std::string, std::size_t> unresolved_by_name;

    friend bool operator==(const GraphDiagnostics&, const GraphDiagnostics&) = default;
};

struct NodeOverlap {
    NodeId node = 0;
    std::size_t len = 0;

    friend bool operator==(const NodeOverlap&, const NodeOverlap&) = default;
};

struct NodeSpanAssignment {
    std::size_t fragment_id = 0;
    std::vector<NodeOverlap> nodes;

    friend bool operator==(const NodeSpanAssignment&, const NodeSpanAssignment&) = default;
};

/// Undirected weighted graph over a repository: per-file syntax trees, the
/// directory tree, file-to-root links and call edges.
class CodeGraph {
public:
    CodeGraph() = default;
    CodeGraph(std::vector<CodeNode> nodes, std::vector<CodeEdge> edges, GraphDiagnostics diagnostics);

    const std::vector<CodeNode>& nodes() const { return nodes_; }
    const std::vector<CodeEdge>& edges() const { return edges_; }
    const GraphDiagnostics& diagnostics() const { return diagnostics_; }
    std::size_t size() const { return nodes_.size(); }

    const CodeNode& node(NodeId id) const;
    std::span<const std::pair<NodeId, double>> neighbors(NodeId id) const;
    const std::vector<NodeId>& children(NodeId id) const { return children_.at(id); }

    std::optional<NodeId> file_node(const std::string& path) const;
    /// Syntax root of a parsed, non-empty file.
    std::optional<NodeId> syntax_root(const std::string& path) const;

    friend bool operator==(const CodeGraph& a, const CodeGraph& b) {
        return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.diagnostics_ == b.diagnostics_;
    }

private:
    std::vector<CodeNode> nodes_;
    std::vector<CodeEdge> edges_;
    GraphDiagnostics diagnostics_;
    std::vector<std::vector<std::pair<NodeId, double>>> adjacency_;
    std::vector<std::vector<NodeId>> children_;
    std::unordered_map<std::string, NodeId> file_nodes_;
    std::unordered_map<std::string, NodeId> syntax_roots_;
};

/// Builds the repository graph. Paths use '/' separators and are relative to
/// the repository root. Files the parser rejects keep only their file node and
/// are listed in diagnostics.
CodeGraph build_code_graph(std::span<const SourceFile> files, const std::string& language);

/// Maximum over all paths of the product of edge weights; 1 for a == b and
/// 0 when no path exists.
double node_distance(const CodeGraph& g, NodeId a, NodeId b);

/// Max-product distances from `source` to every node.
std::vector<double> node_distances_from(const CodeGraph& g, NodeId source);

/// Covers the fragment's byte range with syntax nodes: nodes fully inside the
/// fragment count whole, nodes straddling its edges count their clipped
/// overlap, and bytes covered by neither go to the smallest node enclosing the
/// whole fragment. Each fragment byte is attributed to exactly one node.
NodeSpanAssignment map_fragment_to_nodes(const CodeGraph& g, const Fragment& frag);

} // namespace fragmem
