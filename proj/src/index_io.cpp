#include "fragmem/index_io.hpp"

#include <fstream>
#include <sstream>

#include "fragmem/error.hpp"
#include "json.hpp"

namespace fragmem {

using nlohmann::json;

namespace {

json range_json(const Range& r) {
    return json::array({r.begin, r.end});
}

Range range_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw IndexFormatError("range must be a two-element array");
    Range r{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
    if (r.end < r.begin) throw IndexFormatError("range end precedes begin");
    return r;
}

json fragment_json(const Fragment& f) {
    json src = {{"kind", to_string(f.source.kind)}};
    if (f.source.path) src["path"] = *f.source.path;
    if (f.source.line_range) src["line_range"] = range_json(*f.source.line_range);
    if (f.source.byte_range) src["byte_range"] = range_json(*f.source.byte_range);
    if (f.source.turn_index) src["turn_index"] = *f.source.turn_index;
    if (f.source.timestamp) src["timestamp"] = *f.source.timestamp;
    return {{"id", f.id}, {"loc", f.loc}, {"text", f.text}, {"source", src}, {"token_estimate", f.token_estimate}};
}

Fragment fragment_from(const json& j) {
    Fragment f;
    f.id = j.at("id").get<std::size_t>();
    f.loc = j.at("loc").get<std::size_t>();
    f.text = j.at("text").get<std::string>();
    f.token_estimate = j.at("token_estimate").get<std::size_t>();
    const auto& src = j.at("source");
    f.source.kind = source_kind_from_string(src.at("kind").get<std::string>());
    if (src.contains("path")) f.source.path = src["path"].get<std::string>();
    if (src.contains("line_range")) f.source.line_range = range_from(src["line_range"]);
    if (src.contains("byte_range")) f.source.byte_range = range_from(src["byte_range"]);
    if (src.contains("turn_index")) f.source.turn_index = src["turn_index"].get<std::size_t>();
    if (src.contains("timestamp")) f.source.timestamp = src["timestamp"].get<std::string>();
    return f;
}

json provider_json(const EmbeddingProviderSpec& p) {
    return {{"kind", p.kind == ProviderKind::Remote ? "remote" : "local"},
            {"endpoint_url", p.endpoint_url},
            {"model_name", p.model_name},
            {"auth_token_env_var", p.auth_token_env_var},
            {"timeout_seconds", p.timeout_seconds},
            {"max_retries", p.max_retries},
            {"backoff_initial_ms", p.backoff_initial_ms},
            {"dim", p.dim},
            {"hash_seed", p.hash_seed}};
}

EmbeddingProviderSpec provider_from(const json& j) {
    EmbeddingProviderSpec p;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "remote") {
        p.kind = ProviderKind::Remote;
    } else if (kind == "local") {
        p.kind = ProviderKind::LocalDeterministic;
    } else {
        throw IndexFormatError("unknown provider kind '" + kind + "'");
    }
    p.endpoint_url = j.at("endpoint_url").get<std::string>();
    p.model_name = j.at("model_name").get<std::string>();
    p.auth_token_env_var = j.at("auth_token_env_var").get<std::string>();
    p.timeout_seconds = j.at("timeout_seconds").get<double>();
    p.max_retries = j.at("max_retries").get<int>();
    p.backoff_initial_ms = j.at("backoff_initial_ms").get<int>();
    p.dim = j.at("dim").get<std::size_t>();
    p.hash_seed = j.at("hash_seed").get<std::uint64_t>();
    return p;
}

json relation_json(const RelationSpec& r) {
    return {{"kind", to_string(r.kind)},
            {"w_rel", r.w_rel},
            {"semantic_mode", to_string(r.semantic_mode)},
            {"sparsity_floor", r.sparsity_floor}};
}

RelationSpec relation_from(const json& j) {
    RelationSpec r;
    r.kind = relation_kind_from_string(j.at("kind").get<std::string>());
    r.w_rel = j.at("w_rel").get<double>();
    r.semantic_mode = semantic_mode_from_string(j.at("semantic_mode").get<std::string>());
    r.sparsity_floor = j.at("sparsity_floor").get<double>();
    return r;
}

json graph_json(const CodeGraph& g) {
    json nodes = json::array();
    for (const auto& n : g.nodes()) {
        json node = {{"id", n.id}, {"kind", to_string(n.kind)}, {"path", n.path}, {"text_length", n.text_length}};
        if (n.kind == NodeKind::Syntax) node["syntax_kind"] = n.syntax_kind;
        if (!n.name.empty()) node["name"] = n.name;
        if (n.byte_span) node["byte_span"] = range_json(*n.byte_span);
        if (n.parent) node["parent"] = *n.parent;
        nodes.push_back(std::move(node));
    }
    json edges = json::array();
    for (const auto& e : g.edges()) {
        edges.push_back({e.a, e.b, e.weight, to_string(e.kind)});
    }
    const auto& d = g.diagnostics();
    return {{"nodes", nodes},
            {"edges", edges},
            {"diagnostics",
             {{"unparsed_files", d.unparsed_files},
              {"unresolved_calls", d.unresolved_calls},
              {"unresolved_by_name", d.unresolved_by_name}}}};
}

CodeGraph graph_from(const json& j) {
    std::vector<CodeNode> nodes;
    for (const auto& n : j.at("nodes")) {
        CodeNode node;
        node.id = n.at("id").get<std::size_t>();
        node.kind = node_kind_from_string(n.at("kind").get<std::string>());
        node.path = n.at("path").get<std::string>();
        node.text_length = n.at("text_length").get<std::size_t>();
        if (n.contains("syntax_kind")) node.syntax_kind = n["syntax_kind"].get<std::string>();
        if (n.contains("name")) node.name = n["name"].get<std::string>();
        if (n.contains("byte_span")) node.byte_span = range_from(n["byte_span"]);
        if (n.contains("parent")) node.parent = n["parent"].get<std::size_t>();
        if (node.kind == NodeKind::Syntax && !node.byte_span) {
            throw IndexFormatError("syntax node " + std::to_string(node.id) + " lacks a byte span");
        }
        nodes.push_back(std::move(node));
    }
    std::vector<CodeEdge> edges;
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 4) throw IndexFormatError("edge rows must be [a, b, weight, kind]");
        edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>(),
                         edge_kind_from_string(e[3].get<std::string>())});
    }
    GraphDiagnostics diag;
    const auto& d = j.at("diagnostics");
    diag.unparsed_files = d.at("unparsed_files").get<std::vector<std::string>>();
    diag.unresolved_calls = d.at("unresolved_calls").get<std::size_t>();
    diag.unresolved_by_name = d.at("unresolved_by_name").get<std::map<std::string, std::size_t>>();
    return CodeGraph(std::move(nodes), std::move(edges), std::move(diag));
}

json split_json(const Index& index) {
    switch (index.kind) {
    case SourceKind::Story: return {{"words_per_fragment", index.story_split.words_per_fragment}};
    case SourceKind::Code:
        return {{"window_lines", index.code_split.window_lines}, {"stride_overlap", index.code_split.stride_overlap}};
    case SourceKind::Chat: return json::object();
    }
    return json::object();
}

} // namespace

std::string index_to_json(const Index& index) {
    json doc;
    doc["format"] = kIndexFormat;
    doc["kind"] = to_string(index.kind);
    doc["split"] = split_json(index);
    doc["language"] = index.language;
    doc["fragments"] = json::array();
    for (const auto& f : index.fragments) doc["fragments"].push_back(fragment_json(f));
    doc["provider"] = provider_json(index.provider);
    if (index.embeddings) {
        json rows = json::array();
        for (const auto& e : *index.embeddings) rows.push_back(e.values);
        doc["embeddings"] = std::move(rows);
    } else {
        doc["embeddings"] = nullptr;
    }
    if (index.bm25) {
        doc["bm25"] = {{"k1", index.bm25->params().k1},
                       {"b", index.bm25->params().b},
                       {"term_freqs", index.bm25->term_freqs()}};
    } else {
        doc["bm25"] = nullptr;
    }
    doc["relation"] = relation_json(index.relation);
    json entries = json::array();
    for (const auto& e : index.matrix.upper_entries()) entries.push_back({e.i, e.j, e.weight});
    doc["matrix"] = {{"n", index.matrix.n()}, {"entries", std::move(entries)}};
    if (index.graph) {
        doc["graph"] = graph_json(*index.graph);
        json assignments = json::array();
        for (const auto& a : index.assignments) {
            json nodes = json::array();
            for (const auto& o : a.nodes) nodes.push_back({o.node, o.len});
            assignments.push_back({{"fragment_id", a.fragment_id}, {"nodes", std::move(nodes)}});
        }
        doc["assignments"] = std::move(assignments);
    } else {
        doc["graph"] = nullptr;
        doc["assignments"] = json::array();
    }
    doc["diagnostics"] = index.diagnostics;
    return doc.dump(1) + "\n";
}

Index index_from_json(const std::string& text) {
    const json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw IndexFormatError("index file is not a JSON object");
    }
    if (!doc.contains("format") || doc["format"] != kIndexFormat) {
        throw IndexFormatError(std::string("index format tag mismatch (expected ") + kIndexFormat + ")");
    }
    try {
        Index index;
        index.kind = source_kind_from_string(doc.at("kind").get<std::string>());
        const auto& split = doc.at("split");
        if (index.kind == SourceKind::Story) {
            index.story_split.words_per_fragment = split.at("words_per_fragment").get<std::size_t>();
        } else if (index.kind == SourceKind::Code) {
            index.code_split.window_lines = split.at("window_lines").get<std::size_t>();
            index.code_split.stride_overlap = split.at("stride_overlap").get<std::size_t>();
        }
        index.language = doc.at("language").get<std::string>();
        for (const auto& f : doc.at("fragments")) index.fragments.push_back(fragment_from(f));
        const std::size_t n = index.fragments.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (index.fragments[i].id != i) {
                throw IndexFormatError("fragment ids must equal their position (fragment " + std::to_string(i) + ")");
            }
        }
        index.provider = provider_from(doc.at("provider"));
        if (!doc.at("embeddings").is_null()) {
            std::vector<EmbeddingVector> rows;
            for (const auto& r : doc["embeddings"]) rows.push_back({r.get<std::vector<double>>()});
            if (rows.size() != n) throw IndexFormatError("embedding count does not match fragment count");
            for (const auto& r : rows) {
                if (r.dim() != rows.front().dim()) throw IndexFormatError("embedding dimensions differ");
            }
            index.embeddings = std::move(rows);
        }
        if (!doc.at("bm25").is_null()) {
            const auto& b = doc["bm25"];
            auto tfs = b.at("term_freqs").get<std::vector<std::map<std::string, std::size_t>>>();
            if (tfs.size() != n) throw IndexFormatError("BM25 statistics do not match fragment count");
            index.bm25 = Bm25Index(std::move(tfs), Bm25Params{b.at("k1").get<double>(), b.at("b").get<double>()});
        }
        index.relation = relation_from(doc.at("relation"));
        const auto& m = doc.at("matrix");
        if (m.at("n").get<std::size_t>() != n) throw IndexFormatError("relation matrix size does not match fragments");
        std::vector<RelationEntry> entries;
        for (const auto& e : m.at("entries")) {
            if (!e.is_array() || e.size() != 3) throw IndexFormatError("matrix rows must be [i, j, weight]");
            entries.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
        }
        index.matrix = RelationMatrix::from_entries(n, entries);
        if (!doc.at("graph").is_null()) {
            index.graph = graph_from(doc["graph"]);
            for (const auto& a : doc.at("assignments")) {
                NodeSpanAssignment asg;
                asg.fragment_id = a.at("fragment_id").get<std::size_t>();
                if (asg.fragment_id >= n) throw IndexFormatError("assignment references a missing fragment");
                for (const auto& o : a.at("nodes")) {
                    const NodeOverlap overlap{o.at(0).get<std::size_t>(), o.at(1).get<std::size_t>()};
                    if (overlap.node >= index.graph->size()) {
                        throw IndexFormatError("assignment references a missing graph node");
                    }
                    asg.nodes.push_back(overlap);
                }
                index.assignments.push_back(std::move(asg));
            }
            if (index.assignments.size() != n) throw IndexFormatError("node assignment count does not match fragments");
        }
        index.diagnostics = doc.at("diagnostics").get<std::vector<std::string>>();
        return index;
    } catch (const IndexFormatError&) {
        throw;
    } catch (const MatrixContractError& e) {
        throw IndexFormatError(std::string("invalid relation matrix: ") + e.what());
    } catch (const Error& e) {
        throw IndexFormatError(std::string("invalid index: ") + e.what());
    } catch (const json::exception& e) {
        throw IndexFormatError(std::string("malformed index: ") + e.what());
    }
}

void save_index(const Index& index, const std::string& path) {
    const auto text = index_to_json(index);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write index file '" + path + "'");
    }
    out << text;
    if (!out) {
        throw InputError("failed writing index file '" + path + "'");
    }
}

Index load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read index file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return index_from_json(ss.str());
}

} // namespace fragmem
