#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fragmem/cli.hpp"
#include "fragmem/embeddings.hpp"
#include "fragmem/error.hpp"
#include "fragmem/index_io.hpp"
#include "fragmem/manager.hpp"
#include "fragmem/scoring.hpp"

namespace py = pybind11;
using namespace fragmem;

namespace {

py::dict fragment_dict(const Fragment& f) {
    py::dict d;
    d["id"] = f.id;
    d["loc"] = f.loc;
    d["text"] = f.text;
    d["token_estimate"] = f.token_estimate;
    d["kind"] = to_string(f.source.kind);
    if (f.source.path) d["path"] = *f.source.path;
    if (f.source.line_range) d["line_range"] = py::make_tuple(f.source.line_range->begin, f.source.line_range->end);
    if (f.source.byte_range) d["byte_range"] = py::make_tuple(f.source.byte_range->begin, f.source.byte_range->end);
    if (f.source.turn_index) d["turn_index"] = *f.source.turn_index;
    if (f.source.timestamp) d["timestamp"] = *f.source.timestamp;
    return d;
}

py::list fragment_list(const std::vector<Fragment>& frags) {
    py::list out;
    for (const auto& f : frags) out.append(fragment_dict(f));
    return out;
}

std::vector<SourceFile> source_files(const std::map<std::string, std::string>& files) {
    std::vector<SourceFile> out;
    for (const auto& [path, text] : files) out.push_back({path, text});
    return out;
}

void apply_relation(RelationSpec& spec, const std::optional<std::string>& relation, const std::optional<double>& w_rel,
                    const std::optional<std::string>& semantic_mode) {
    if (relation) spec.kind = relation_kind_from_string(*relation);
    if (w_rel) spec.w_rel = *w_rel;
    if (semantic_mode) spec.semantic_mode = semantic_mode_from_string(*semantic_mode);
}

py::dict context_dict(const RetrievedContext& c) {
    py::dict d;
    d["fragment_ids"] = c.fragment_ids;
    d["text"] = c.text;
    d["token_estimate"] = c.token_estimate;
    d["s_ind"] = c.scores.s_ind;
    d["s_env"] = c.scores.s_env;
    d["s_rel"] = c.scores.s_rel;
    d["selected"] = c.selection.indices;
    d["warnings"] = c.warnings;
    return d;
}

} // namespace

PYBIND11_MODULE(_fragmem, m) {
    m.doc() = "Relation-aware fragment retrieval";

    // Raised errors carry the library error kind as `.kind`.
    static PyObject* base = py::exception<Error>(m, "FragmemError").inc_ref().ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = py::handle(base)(std::string(to_string(e.kind())) + ": " + e.what());
            err.attr("kind") = to_string(e.kind());
            PyErr_SetObject(base, err.ptr());
        }
    });

    m.def("split_story", [](const std::string& text, std::size_t words) {
        return fragment_list(split_story(text, {words}));
    }, py::arg("text"), py::arg("words_per_fragment") = 500);

    m.def("split_code", [](const std::map<std::string, std::string>& files, std::size_t window, std::size_t overlap) {
        const auto files_v = source_files(files);
        return fragment_list(split_code(files_v, {window, overlap}).fragments);
    }, py::arg("files"), py::arg("window_lines") = 20, py::arg("stride_overlap") = 10);

    m.def("cosine_similarity", [](const std::vector<double>& a, const std::vector<double>& b) {
        return cosine_similarity(EmbeddingVector{a}, EmbeddingVector{b});
    });

    m.def("environment_scores", [](const std::vector<double>& s_ind,
                                   const std::vector<std::tuple<std::size_t, std::size_t, double>>& entries) {
        std::vector<RelationEntry> es;
        for (const auto& [i, j, w] : entries) es.push_back({i, j, w});
        return environment_scores(s_ind, RelationMatrix::from_entries(s_ind.size(), es));
    }, py::arg("s_ind"), py::arg("entries"));

    m.def("top_k", [](const std::vector<double>& scores, std::size_t k) { return top_k(scores, k).indices; });

    py::class_<Index>(m, "Index")
        .def_property_readonly("kind", [](const Index& i) { return to_string(i.kind); })
        .def_property_readonly("relation", [](const Index& i) { return to_string(i.relation.kind); })
        .def_property_readonly("fragments", [](const Index& i) { return fragment_list(i.fragments); })
        .def_property_readonly("diagnostics", [](const Index& i) { return i.diagnostics; })
        .def_property_readonly("matrix_density", [](const Index& i) { return i.matrix.density(); })
        .def("__len__", [](const Index& i) { return i.fragments.size(); })
        .def("to_json", [](const Index& i) { return index_to_json(i); })
        .def_static("from_json", [](const std::string& s) { return index_from_json(s); })
        .def("save", [](const Index& i, const std::string& path) { save_index(i, path); })
        .def_static("load", [](const std::string& path) { return load_index(path); });

    m.def("build_story_index", [](const std::string& text, std::optional<std::size_t> words,
                                  std::optional<std::string> relation, std::optional<double> w_rel,
                                  std::optional<std::string> semantic_mode) {
        auto opts = default_index_options(SourceKind::Story);
        if (words) opts.story_split.words_per_fragment = *words;
        apply_relation(opts.relation, relation, w_rel, semantic_mode);
        return build_story_index(text, opts);
    }, py::arg("text"), py::arg("words_per_fragment") = py::none(), py::arg("relation") = py::none(),
       py::arg("w_rel") = py::none(), py::arg("semantic_mode") = py::none());

    m.def("build_code_index", [](const std::map<std::string, std::string>& files, std::optional<std::size_t> window,
                                 std::optional<std::size_t> overlap, std::optional<std::string> relation) {
        auto opts = default_index_options(SourceKind::Code);
        if (window) opts.code_split.window_lines = *window;
        if (overlap) opts.code_split.stride_overlap = *overlap;
        apply_relation(opts.relation, relation, std::nullopt, std::nullopt);
        const auto files_v = source_files(files);
        return build_code_index(files_v, opts);
    }, py::arg("files"), py::arg("window_lines") = py::none(), py::arg("stride_overlap") = py::none(),
       py::arg("relation") = py::none());

    m.def("build_chat_index", [](const std::vector<std::tuple<std::string, std::string, std::string>>& turns,
                                 std::optional<double> w_rel) {
        auto opts = default_index_options(SourceKind::Chat);
        if (w_rel) opts.relation.w_rel = *w_rel;
        std::vector<ChatTurn> ts;
        for (const auto& [u, a, t] : turns) ts.push_back({u, a, t});
        return build_chat_index(ts, opts);
    }, py::arg("turns"), py::arg("w_rel") = py::none());

    m.def("retrieve", [](const Index& index, const std::string& query, std::optional<std::size_t> k,
                         std::optional<double> alpha, std::optional<std::string> ordering,
                         std::optional<std::size_t> context_tokens, bool vanilla) {
        auto cfg = default_retrieval_config(index);
        if (k) cfg.k = *k;
        if (alpha) cfg.alpha = *alpha;
        if (ordering) cfg.ordering = ordering_from_string(*ordering);
        cfg.context_token_budget = context_tokens;
        return context_dict(vanilla ? retrieve_vanilla(query, index, cfg) : retrieve(query, index, cfg));
    }, py::arg("index"), py::arg("query"), py::arg("k") = py::none(), py::arg("alpha") = py::none(),
       py::arg("ordering") = py::none(), py::arg("context_tokens") = py::none(), py::arg("vanilla") = false);

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"));
}
