#include "fragmem/codegraph.hpp"

#include <algorithm>
#include <queue>

#include "fragmem/error.hpp"
#include "fragmem/python_parser.hpp"

namespace fragmem {

const char* to_string(NodeKind kind) {
    switch (kind) {
    case NodeKind::Syntax: return "syntax";
    case NodeKind::File: return "file";
    case NodeKind::Directory: return "directory";
    }
    return "unknown";
}

const char* to_string(EdgeKind kind) {
    switch (kind) {
    case EdgeKind::SyntaxTree: return "syntax-tree";
    case EdgeKind::DirTree: return "dir-tree";
    case EdgeKind::FileRootLink: return "file-root-link";
    case EdgeKind::Call: return "call";
    }
    return "unknown";
}

NodeKind node_kind_from_string(const std::string& name) {
    if (name == "syntax") return NodeKind::Syntax;
    if (name == "file") return NodeKind::File;
    if (name == "directory") return NodeKind::Directory;
    throw IndexFormatError("unknown node kind '" + name + "'");
}

EdgeKind edge_kind_from_string(const std::string& name) {
    if (name == "syntax-tree") return EdgeKind::SyntaxTree;
    if (name == "dir-tree") return EdgeKind::DirTree;
    if (name == "file-root-link") return EdgeKind::FileRootLink;
    if (name == "call") return EdgeKind::Call;
    throw IndexFormatError("unknown edge kind '" + name + "'");
}

double edge_weight(EdgeKind kind) {
    switch (kind) {
    case EdgeKind::SyntaxTree: return 0.5;
    case EdgeKind::DirTree: return 0.3;
    case EdgeKind::FileRootLink: return 1.0;
    case EdgeKind::Call: return 0.8;
    }
    return 0.0;
}

CodeGraph::CodeGraph(std::vector<CodeNode> nodes, std::vector<CodeEdge> edges, GraphDiagnostics diagnostics)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), diagnostics_(std::move(diagnostics)) {
    adjacency_.resize(nodes_.size());
    children_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].id != i) {
            throw IndexFormatError("code graph node ids must equal their position");
        }
        if (nodes_[i].kind == NodeKind::File) {
            file_nodes_.emplace(nodes_[i].path, i);
        } else if (nodes_[i].kind == NodeKind::Syntax) {
            if (nodes_[i].parent) {
                if (*nodes_[i].parent >= nodes_.size()) {
                    throw IndexFormatError("syntax node parent out of range");
                }
                children_[*nodes_[i].parent].push_back(i);
            } else {
                syntax_roots_.emplace(nodes_[i].path, i);
            }
        }
    }
    for (const auto& e : edges_) {
        if (e.a >= nodes_.size() || e.b >= nodes_.size() || e.a == e.b) {
            throw IndexFormatError("code graph edge has invalid endpoints");
        }
        if (e.weight < 0.0 || e.weight > 1.0) {
            throw IndexFormatError("code graph edge weight outside [0, 1]");
        }
        adjacency_[e.a].emplace_back(e.b, e.weight);
        adjacency_[e.b].emplace_back(e.a, e.weight);
    }
}

const CodeNode& CodeGraph::node(NodeId id) const {
    if (id >= nodes_.size()) {
        throw NodeNotFoundError("node " + std::to_string(id) + " not in graph of " + std::to_string(nodes_.size()) +
                                " nodes");
    }
    return nodes_[id];
}

std::span<const std::pair<NodeId, double>> CodeGraph::neighbors(NodeId id) const {
    node(id);
    return adjacency_[id];
}

std::optional<NodeId> CodeGraph::file_node(const std::string& path) const {
    const auto it = file_nodes_.find(path);
    if (it == file_nodes_.end()) return std::nullopt;
    return it->second;
}

std::optional<NodeId> CodeGraph::syntax_root(const std::string& path) const {
    const auto it = syntax_roots_.find(path);
    if (it == syntax_roots_.end()) return std::nullopt;
    return it->second;
}

namespace {

std::string parent_dir(const std::string& path) {
    const auto slash = path.rfind('/');
    return slash == std::string::npos ? std::string() : path.substr(0, slash);
}

class GraphBuilder {
public:
    NodeId add(CodeNode node) {
        node.id = nodes_.size();
        nodes_.push_back(std::move(node));
        return nodes_.back().id;
    }

    void link(NodeId a, NodeId b, EdgeKind kind) { edges_.push_back({a, b, edge_weight(kind), kind}); }

    NodeId directory(const std::string& path) {
        if (const auto it = dirs_.find(path); it != dirs_.end()) {
            return it->second;
        }
        CodeNode node;
        node.kind = NodeKind::Directory;
        node.path = path;
        std::optional<NodeId> parent;
        if (!path.empty()) {
            parent = directory(parent_dir(path));
        }
        const NodeId id = add(std::move(node));
        dirs_.emplace(path, id);
        if (parent) {
            link(*parent, id, EdgeKind::DirTree);
        }
        return id;
    }

    std::vector<CodeNode> nodes_;
    std::vector<CodeEdge> edges_;
    std::map<std::string, NodeId> dirs_;
};

} // namespace

CodeGraph build_code_graph(std::span<const SourceFile> files, const std::string& language) {
    const auto parser = make_parser(language);
    if (files.empty()) {
        throw EmptyContextError("code graph needs at least one source file");
    }
    std::vector<const SourceFile*> ordered;
    for (const auto& f : files) ordered.push_back(&f);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const SourceFile* a, const SourceFile* b) { return a->path < b->path; });

    GraphBuilder gb;
    GraphDiagnostics diag;
    std::vector<NodeId> calls;
    std::map<std::string, std::vector<NodeId>> definitions;
    gb.directory("");

    for (const SourceFile* file : ordered) {
        if (file->path.empty() || file->path.front() == '/') {
            throw InputError("code graph paths must be non-empty and repository-relative: '" + file->path + "'");
        }
        const NodeId dir = gb.directory(parent_dir(file->path));
        CodeNode fnode;
        fnode.kind = NodeKind::File;
        fnode.path = file->path;
        fnode.text_length = file->text.size();
        const NodeId file_id = gb.add(std::move(fnode));
        gb.link(dir, file_id, EdgeKind::DirTree);
        if (file->text.empty()) {
            continue;
        }
        ParsedFile parsed;
        try {
            parsed = parser->parse(file->text);
        } catch (const ParseError& e) {
            diag.unparsed_files.push_back(file->path + ": " + e.what());
            continue;
        }
        std::vector<NodeId> ids(parsed.nodes.size());
        for (std::size_t i = 0; i < parsed.nodes.size(); ++i) {
            const auto& rec = parsed.nodes[i];
            CodeNode node;
            node.kind = NodeKind::Syntax;
            node.syntax_kind = rec.kind;
            node.name = rec.name;
            node.path = file->path;
            node.byte_span = rec.span;
            node.text_length = rec.span.size();
            if (rec.parent >= 0) {
                node.parent = ids[static_cast<std::size_t>(rec.parent)];
            }
            ids[i] = gb.add(std::move(node));
            if (rec.parent >= 0) {
                gb.link(ids[static_cast<std::size_t>(rec.parent)], ids[i], EdgeKind::SyntaxTree);
            } else {
                gb.link(file_id, ids[i], EdgeKind::FileRootLink);
            }
            if (rec.kind == parser->definition_kind()) {
                definitions[rec.name].push_back(ids[i]);
            } else if (rec.kind == parser->call_kind()) {
                calls.push_back(ids[i]);
            }
        }
    }

    for (const NodeId call : calls) {
        const auto& call_node = gb.nodes_[call];
        const auto it = definitions.find(call_node.name);
        if (it == definitions.end()) {
            ++diag.unresolved_calls;
            ++diag.unresolved_by_name[call_node.name];
            continue;
        }
        std::vector<NodeId> same_file;
        for (const NodeId def : it->second) {
            if (gb.nodes_[def].path == call_node.path) same_file.push_back(def);
        }
        const auto& targets = same_file.empty() ? it->second : same_file;
        for (const NodeId def : targets) {
            gb.link(call, def, EdgeKind::Call);
        }
    }
    return CodeGraph(std::move(gb.nodes_), std::move(gb.edges_), std::move(diag));
}

std::vector<double> node_distances_from(const CodeGraph& g, NodeId source) {
    g.node(source);
    // Dijkstra on the max-product semiring: weights lie in [0, 1], so extending
    // a path never increases its product and the greedy settle order is exact.
    std::vector<double> best(g.size(), 0.0);
    std::vector<bool> settled(g.size(), false);
    using Entry = std::pair<double, NodeId>;
    std::priority_queue<Entry> heap;
    best[source] = 1.0;
    heap.emplace(1.0, source);
    while (!heap.empty()) {
        const auto [value, u] = heap.top();
        heap.pop();
        if (settled[u]) continue;
        settled[u] = true;
        for (const auto& [v, w] : g.neighbors(u)) {
            if (w <= 0.0 || settled[v]) continue;
            const double candidate = value * w;
            if (candidate > best[v]) {
                best[v] = candidate;
                heap.emplace(candidate, v);
            }
        }
    }
    return best;
}

double node_distance(const CodeGraph& g, NodeId a, NodeId b) {
    g.node(b);
    if (a == b) {
        g.node(a);
        return 1.0;
    }
    return node_distances_from(g, a)[b];
}

namespace {

void cover(const CodeGraph& g, NodeId id, const Range& frag, std::vector<NodeOverlap>& out) {
    const auto& node = g.node(id);
    const Range span = *node.byte_span;
    const std::size_t lo = std::max(span.begin, frag.begin);
    const std::size_t hi = std::min(span.end, frag.end);
    if (lo >= hi) {
        return;
    }
    if (span.begin >= frag.begin && span.end <= frag.end) {
        out.push_back({id, span.size()});
        return;
    }
    if (span.begin <= frag.begin && span.end >= frag.end) {
        std::size_t covered = 0;
        for (const NodeId child : g.children(id)) {
            const Range cs = *g.node(child).byte_span;
            const std::size_t clo = std::max(cs.begin, frag.begin);
            const std::size_t chi = std::min(cs.end, frag.end);
            if (clo >= chi) continue;
            covered += chi - clo;
            cover(g, child, frag, out);
        }
        if (frag.size() > covered) {
            out.push_back({id, frag.size() - covered});
        }
        return;
    }
    out.push_back({id, hi - lo});
}

} // namespace

NodeSpanAssignment map_fragment_to_nodes(const CodeGraph& g, const Fragment& frag) {
    if (frag.source.kind != SourceKind::Code || !frag.source.path || !frag.source.byte_range) {
        throw FragmentUnmappedError("fragment " + std::to_string(frag.id) + " is not a code fragment with a byte range");
    }
    const std::string& path = *frag.source.path;
    const auto file = g.file_node(path);
    if (!file) {
        throw FragmentUnmappedError("fragment " + std::to_string(frag.id) + " path '" + path + "' is not in the graph");
    }
    NodeSpanAssignment result;
    result.fragment_id = frag.id;
    const Range range = *frag.source.byte_range;
    if (range.size() == 0) {
        throw FragmentUnmappedError("fragment " + std::to_string(frag.id) + " has an empty byte range");
    }
    const auto root = g.syntax_root(path);
    if (!root) {
        result.nodes.push_back({*file, range.size()});
        return result;
    }
    const Range root_span = *g.node(*root).byte_span;
    if (range.begin < root_span.begin || range.end > root_span.end) {
        throw FragmentUnmappedError("fragment " + std::to_string(frag.id) + " byte range exceeds file '" + path + "'");
    }
    cover(g, *root, range, result.nodes);
    return result;
}

} // namespace fragmem
