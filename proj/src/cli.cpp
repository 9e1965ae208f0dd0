#include "fragmem/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "fragmem/index_io.hpp"
#include "fragmem/manager.hpp"
#include "fragmem/python_parser.hpp"
#include "json.hpp"

namespace fragmem {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Input:
    case ErrorKind::EmptyContext:
    case ErrorKind::IndexFormat:
    case ErrorKind::FragmentUnmapped: return kExitInput;
    case ErrorKind::ProviderContract:
    case ErrorKind::RetryableProvider:
    case ErrorKind::Generator: return kExitProvider;
    case ErrorKind::Config:
    case ErrorKind::Dimension:
    case ErrorKind::ZeroNorm:
    case ErrorKind::NodeNotFound:
    case ErrorKind::MatrixContract: return kExitConfig;
    }
    return kExitConfig;
}

namespace {

// CLI11 only reads config files attached to the root app, so subcommand
// files are applied here: keys name long flags, and flags given on the
// command line win.
void apply_config_file(CLI::App& sub, const std::string& path) {
    if (path.empty()) return;
    for (const auto& item : CLI::ConfigTOML().from_file(path)) {
        if (!item.parents.empty() || item.name == "config") throw CLI::ConfigError("unsupported config key " + item.fullname());
        auto* opt = sub.get_option_no_throw("--" + item.name);
        if (opt == nullptr) throw CLI::ConfigError("unknown config key " + item.name);
        if (opt->count() > 0) continue;
        opt->add_result(item.inputs);
        opt->run_callback();
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct ProviderFlags {
    std::string endpoint;
    std::string model;
    std::string token_env;
    std::size_t dim = 384;
    double timeout = 30.0;
    int retries = 3;

    void add(CLI::App* app) {
        app->add_option("--provider-endpoint", endpoint, "Remote embedding endpoint (local hashed embedder when unset)");
        app->add_option("--provider-model", model, "Remote embedding model name");
        app->add_option("--provider-token-env", token_env, "Environment variable holding the embedding API token");
        app->add_option("--embedding-dim", dim, "Local embedder dimension")->check(CLI::PositiveNumber);
        app->add_option("--provider-timeout", timeout, "Remote request timeout in seconds")->check(CLI::PositiveNumber);
        app->add_option("--provider-retries", retries, "Remote retry count")->check(CLI::NonNegativeNumber);
    }

    EmbeddingProviderSpec spec() const {
        EmbeddingProviderSpec p;
        p.dim = dim;
        if (!endpoint.empty()) {
            p.kind = ProviderKind::Remote;
            p.endpoint_url = endpoint;
            p.model_name = model;
            p.auth_token_env_var = token_env;
            p.timeout_seconds = timeout;
            p.max_retries = retries;
        }
        return p;
    }
};

struct RelationFlags {
    std::string relation;
    std::string semantic_mode;
    double w_rel = 0.3;
    CLI::Option* relation_opt = nullptr;
    CLI::Option* mode_opt = nullptr;
    CLI::Option* w_rel_opt = nullptr;

    void add(CLI::App* app) {
        relation_opt = app->add_option("--relation", relation, "Relation kind: semantic, context or code");
        mode_opt = app->add_option("--semantic-mode", semantic_mode, "Semantic relation mode: cosine or one-minus-cosine");
        w_rel_opt = app->add_option("--w-rel", w_rel, "Context-structure decay base in (0, 1]");
    }

    bool any() const { return relation_opt->count() || mode_opt->count() || w_rel_opt->count(); }

    RelationSpec apply(RelationSpec base, std::vector<std::string>& conflicts) const {
        if (relation_opt->count()) {
            const auto kind = relation_kind_from_string(relation);
            if (kind != base.kind) {
                const auto floor = base.sparsity_floor;
                base = RelationSpec{};
                base.sparsity_floor = floor;
                base.kind = kind;
            }
        }
        if (mode_opt->count()) {
            if (base.kind != RelationKind::Semantic) {
                conflicts.push_back(std::string("--semantic-mode applies only to the semantic relation, not ") +
                                    to_string(base.kind));
            } else {
                base.semantic_mode = semantic_mode_from_string(semantic_mode);
            }
        }
        if (w_rel_opt->count()) {
            if (base.kind != RelationKind::ContextStructure) {
                conflicts.push_back(std::string("--w-rel applies only to the context relation, not ") +
                                    to_string(base.kind));
            } else {
                base.w_rel = w_rel;
            }
        }
        return base;
    }
};

struct GeneratorFlags {
    std::string endpoint;
    std::string model;
    std::string token_env;
    std::string template_file;
    double temperature = 1.0;
    int max_tokens = 256;
    CLI::Option* model_opt = nullptr;
    CLI::Option* token_opt = nullptr;

    void add(CLI::App* app) {
        app->add_option("--generator-endpoint", endpoint, "Remote completion endpoint (stub generator when unset)");
        model_opt = app->add_option("--generator-model", model, "Remote generator model name");
        token_opt = app->add_option("--generator-token-env", token_env, "Environment variable holding the generator token");
        app->add_option("--template-file", template_file, "Prompt template with {instruction} and {context}");
        app->add_option("--temperature", temperature, "Generator sampling temperature");
        app->add_option("--max-tokens", max_tokens, "Generator completion limit");
    }

    void check(std::vector<std::string>& conflicts) const {
        if (endpoint.empty() && (model_opt->count() || token_opt->count())) {
            conflicts.push_back("--generator-model/--generator-token-env require --generator-endpoint");
        }
    }

    GeneratorSpec spec(GeneratorCallback fallback) const {
        GeneratorSpec g;
        if (!template_file.empty()) g.prompt_template = PromptTemplate::from_file(template_file);
        if (endpoint.empty()) {
            g.callback = std::move(fallback);
        } else {
            RemoteGeneratorSpec r;
            r.endpoint_url = endpoint;
            r.model_name = model;
            r.auth_token_env_var = token_env;
            r.temperature = temperature;
            r.max_tokens = max_tokens;
            g.remote = r;
        }
        return g;
    }
};

void raise_conflicts(const std::vector<std::string>& conflicts) {
    if (conflicts.empty()) return;
    std::string msg = "conflicting options: ";
    for (std::size_t i = 0; i < conflicts.size(); ++i) {
        if (i) msg += "; ";
        msg += conflicts[i];
    }
    throw ConfigError(msg);
}

std::vector<ChatTurn> read_transcript(const std::string& path) {
    const auto doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded()) {
        throw InputError("transcript '" + path + "' is not valid JSON");
    }
    const json* turns = &doc;
    if (doc.is_object() && doc.contains("turns")) turns = &doc["turns"];
    if (!turns->is_array()) {
        throw InputError("transcript must be an array of turns or an object with a \"turns\" array");
    }
    std::vector<ChatTurn> out;
    for (const auto& t : *turns) {
        if (!t.is_object() || !t.contains("user") || !t["user"].is_string()) {
            throw InputError("transcript turn " + std::to_string(out.size()) + " lacks a \"user\" string");
        }
        ChatTurn turn;
        turn.user = t["user"].get<std::string>();
        if (t.contains("assistant") && t["assistant"].is_string()) turn.assistant = t["assistant"].get<std::string>();
        if (t.contains("timestamp") && t["timestamp"].is_string()) turn.timestamp = t["timestamp"].get<std::string>();
        out.push_back(std::move(turn));
    }
    return out;
}

std::vector<SourceFile> read_code_tree(const std::string& root, const std::string& language) {
    const auto parser = make_parser(language);
    std::vector<SourceFile> files;
    std::error_code ec;
    const fs::path base(root);
    if (fs::is_regular_file(base, ec)) {
        files.push_back({base.filename().generic_string(), read_file(root)});
        return files;
    }
    if (!fs::is_directory(base, ec)) {
        throw InputError("cannot read source '" + root + "'");
    }
    for (auto it = fs::recursive_directory_iterator(base, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec)) {
        const auto name = it->path().filename().string();
        if (!name.empty() && name[0] == '.') {
            if (it->is_directory()) it.disable_recursion_pending();
            continue;
        }
        if (!it->is_regular_file()) continue;
        const auto rel = fs::relative(it->path(), base).generic_string();
        if (!parser->handles_path(rel)) continue;
        files.push_back({rel, read_file(it->path().string())});
    }
    if (ec) {
        throw InputError("cannot walk source tree '" + root + "': " + ec.message());
    }
    std::sort(files.begin(), files.end(), [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
    if (files.empty()) {
        throw InputError("no " + language + " sources under '" + root + "'");
    }
    return files;
}

json explain_report(const Index& index, const RetrievedContext& ctx) {
    std::set<std::size_t> selected(ctx.selection.indices.begin(), ctx.selection.indices.end());
    json rows = json::array();
    for (std::size_t i = 0; i < index.fragments.size(); ++i) {
        rows.push_back({{"id", i},
                        {"loc", index.fragments[i].loc},
                        {"s_ind", ctx.scores.s_ind[i]},
                        {"s_env", ctx.scores.s_env[i]},
                        {"s_rel", ctx.scores.s_rel[i]},
                        {"selected", selected.count(i) > 0}});
    }
    return {{"alpha", ctx.scores.alpha},
            {"selected", ctx.fragment_ids},
            {"context", ctx.text},
            {"token_estimate", ctx.token_estimate},
            {"rows", rows}};
}

std::string format_ids(const std::vector<std::size_t>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(ids[i]);
    }
    return s;
}

std::string format_number(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Relation-aware fragment retrieval over long contexts", "fragmem"};
    std::map<CLI::App*, std::string> config_files;
    app.require_subcommand(1);

    // index
    auto* index_cmd = app.add_subcommand("index", "Split a source, embed/score it and write an index file");
    std::string index_source, index_output, index_kind, index_scorer, index_language = "python";
    std::size_t fragment_words = 500, window_lines = 20, stride_overlap = 10;
    RelationFlags index_rel;
    ProviderFlags index_provider;
    index_cmd->add_option("source", index_source, "Story text file, code directory/file, or chat transcript JSON")
        ->required();
    index_cmd->add_option("-o,--output", index_output, "Index file to write")->required();
    index_cmd->add_option("--kind", index_kind, "story, code or chat")->required();
    auto* words_opt = index_cmd->add_option("--fragment-words", fragment_words, "Words per story fragment");
    auto* window_opt = index_cmd->add_option("--window-lines", window_lines, "Code window length in lines");
    auto* overlap_opt = index_cmd->add_option("--stride-overlap", stride_overlap, "Lines shared by adjacent windows");
    auto* index_scorer_opt = index_cmd->add_option("--scorer", index_scorer, "embedding or bm25");
    index_cmd->add_option("--language", index_language, "Code language");
    index_rel.add(index_cmd);
    index_provider.add(index_cmd);
    index_cmd->add_option("--config", config_files[index_cmd], "Config file (TOML/INI); command-line flags take precedence");

    // query
    auto* query_cmd = app.add_subcommand("query", "Retrieve fragments for a query");
    std::string query_index, query_text, query_scorer, query_ordering;
    std::size_t query_k = 0, query_budget = 0;
    double query_alpha = 0.5;
    bool explain = false, vanilla = false;
    RelationFlags query_rel;
    query_cmd->add_option("index", query_index, "Index file")->required();
    query_cmd->add_option("query", query_text, "Query text")->required();
    auto* k_opt = query_cmd->add_option("--k", query_k, "Fragments to retrieve");
    query_cmd->add_option("--alpha", query_alpha, "Environment score weight");
    auto* scorer_opt = query_cmd->add_option("--scorer", query_scorer, "embedding or bm25");
    auto* ordering_opt = query_cmd->add_option("--ordering", query_ordering, "rank or position");
    auto* budget_opt = query_cmd->add_option("--context-tokens", query_budget, "Token budget for assembled context");
    query_cmd->add_flag("--explain", explain, "Emit a JSON score report instead of plain context");
    auto* vanilla_opt = query_cmd->add_flag("--vanilla", vanilla, "Rank by independent scores only");
    query_rel.add(query_cmd);
    query_cmd->add_option("--config", config_files[query_cmd], "Config file (TOML/INI); command-line flags take precedence");

    // chat
    auto* chat_cmd = app.add_subcommand("chat", "Replay a transcript through the spill-and-retrieve chat loop");
    std::string transcript_path;
    std::size_t turn_limit = 10, token_limit = 1000, chat_k = 8;
    double chat_alpha = 0.5, chat_w_rel = 0.8;
    std::string chat_ordering = "position";
    ProviderFlags chat_provider;
    GeneratorFlags chat_gen;
    chat_cmd->add_option("--transcript", transcript_path, "Transcript JSON")->required();
    chat_cmd->add_option("--turn-limit", turn_limit, "Live-window turn limit")->check(CLI::PositiveNumber);
    chat_cmd->add_option("--token-limit", token_limit, "Live-window token limit");
    chat_cmd->add_option("--k", chat_k, "Fragments retrieved from spilled memory")->check(CLI::PositiveNumber);
    chat_cmd->add_option("--alpha", chat_alpha, "Environment score weight");
    chat_cmd->add_option("--w-rel", chat_w_rel, "Context-structure decay base");
    chat_cmd->add_option("--ordering", chat_ordering, "rank or position");
    chat_provider.add(chat_cmd);
    chat_gen.add(chat_cmd);
    chat_cmd->add_option("--config", config_files[chat_cmd], "Config file (TOML/INI); command-line flags take precedence");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Tabulate selections over an alpha x w_rel grid");
    std::string sweep_index, sweep_query_file;
    std::vector<double> sweep_alphas{0.2, 0.3, 0.4, 0.5};
    std::vector<double> sweep_w_rels{0.1, 0.3, 0.5, 0.7};
    std::size_t sweep_k = 0;
    sweep_cmd->add_option("index", sweep_index, "Index file")->required();
    sweep_cmd->add_option("--query-file", sweep_query_file, "File holding the query text")->required();
    sweep_cmd->add_option("--alphas", sweep_alphas, "Alpha grid")->delimiter(',');
    auto* w_rels_opt = sweep_cmd->add_option("--w-rels", sweep_w_rels, "w_rel grid")->delimiter(',');
    auto* sweep_k_opt = sweep_cmd->add_option("--k", sweep_k, "Fragments to retrieve");
    sweep_cmd->add_option("--config", config_files[sweep_cmd], "Config file (TOML/INI); command-line flags take precedence");

    std::vector<const char*> argv;
    argv.push_back("fragmem");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), const_cast<char**>(argv.data()));
        for (auto* sub : app.get_subcommands()) apply_config_file(*sub, config_files[sub]);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        const bool subcommand_help = std::string(e.get_name()) == "CallForHelp";
        if (subcommand_help) {
            out << app.help();
            return kExitOk;
        }
        err << "fragmem-error code=" << kExitConfig << " kind=config: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        std::vector<std::string> conflicts;
        if (*index_cmd) {
            const auto kind = source_kind_from_string(index_kind);
            if (kind != SourceKind::Story && words_opt->count()) {
                conflicts.push_back("--fragment-words applies only to story indexes");
            }
            if (kind != SourceKind::Code && (window_opt->count() || overlap_opt->count())) {
                conflicts.push_back("--window-lines/--stride-overlap apply only to code indexes");
            }
            if (kind == SourceKind::Code && window_opt->count() + overlap_opt->count() > 0 &&
                stride_overlap >= window_lines) {
                conflicts.push_back("--stride-overlap must be smaller than --window-lines");
            }
            auto opts = default_index_options(kind);
            opts.language = index_language;
            opts.story_split.words_per_fragment = fragment_words;
            opts.code_split = {window_lines, stride_overlap};
            opts.provider = index_provider.spec();
            if (index_provider.endpoint.empty() && !index_provider.model.empty()) {
                conflicts.push_back("--provider-model requires --provider-endpoint");
            }
            if (index_scorer_opt->count()) opts.scorer = scorer_kind_from_string(index_scorer);
            opts.relation = index_rel.apply(opts.relation, conflicts);
            if (opts.relation.kind == RelationKind::CodeStructure && kind != SourceKind::Code) {
                conflicts.push_back("--relation code requires --kind code");
            }
            raise_conflicts(conflicts);

            Index index;
            if (kind == SourceKind::Story) {
                index = build_story_index(read_file(index_source), opts);
            } else if (kind == SourceKind::Code) {
                const auto files = read_code_tree(index_source, index_language);
                index = build_code_index(files, opts);
            } else {
                const auto turns = read_transcript(index_source);
                if (turns.empty()) throw EmptyContextError("transcript has no turns");
                index = build_chat_index(turns, opts);
            }
            save_index(index, index_output);
            out << "fragments: " << index.fragments.size() << "\n";
            out << "relation: " << to_string(index.relation.kind) << "\n";
            out << "matrix density: " << format_number(index.matrix.density()) << "\n";
            out << "diagnostics: " << index.diagnostics.size() << "\n";
            for (const auto& d : index.diagnostics) err << "warning: " << d << "\n";
            return kExitOk;
        }

        if (*query_cmd) {
            const auto loaded = load_index(query_index);
            auto cfg = default_retrieval_config(loaded);
            if (k_opt->count()) cfg.k = query_k;
            cfg.alpha = query_alpha;
            if (scorer_opt->count()) cfg.scorer = scorer_kind_from_string(query_scorer);
            if (ordering_opt->count()) cfg.ordering = ordering_from_string(query_ordering);
            if (budget_opt->count()) cfg.context_token_budget = query_budget;
            if (vanilla_opt->count() && query_rel.any()) {
                conflicts.push_back("--vanilla ignores relations; drop --relation/--w-rel/--semantic-mode");
            }
            cfg.relation = query_rel.apply(loaded.relation, conflicts);
            raise_conflicts(conflicts);

            std::optional<Index> rebuilt;
            if (!(cfg.relation == loaded.relation)) rebuilt = with_relation(loaded, cfg.relation);
            const Index& index = rebuilt ? *rebuilt : loaded;
            const auto ctx = vanilla ? retrieve_vanilla(query_text, index, cfg) : retrieve(query_text, index, cfg);
            for (const auto& w : ctx.warnings) err << "warning: " << w << "\n";
            if (explain) {
                out << explain_report(index, ctx).dump(1) << "\n";
            } else {
                out << ctx.text << "\n";
            }
            return kExitOk;
        }

        if (*chat_cmd) {
            chat_gen.check(conflicts);
            raise_conflicts(conflicts);
            const auto turns = read_transcript(transcript_path);
            auto index_opts = default_index_options(SourceKind::Chat);
            index_opts.provider = chat_provider.spec();
            index_opts.relation.w_rel = chat_w_rel;
            auto chat_cfg = default_chat_config();
            chat_cfg.retrieval.k = chat_k;
            chat_cfg.retrieval.alpha = chat_alpha;
            chat_cfg.retrieval.relation = index_opts.relation;
            chat_cfg.retrieval.ordering = ordering_from_string(chat_ordering);
            const auto builder = default_chat_index_builder(index_opts);

            // Without a remote generator the recorded assistant replies are replayed.
            std::size_t current = 0;
            const auto generator = chat_gen.spec([&](const std::string&) { return turns[current].assistant; });

            ChatMemoryState state;
            state.thresholds = {token_limit, turn_limit};
            for (current = 0; current < turns.size(); ++current) {
                auto step = chat_step(state, turns[current].user, turns[current].timestamp, builder, chat_cfg, generator);
                json row = {{"turn", current},
                            {"spilled_now", step.spilled_now},
                            {"spilled_turns", step.state.spilled.size()},
                            {"live_turns", step.state.live.size()},
                            {"live_tokens", live_window_tokens(step.state.live, chat_cfg.chars_per_token)},
                            {"reply", step.reply}};
                if (step.retrieved) {
                    row["retrieved"] = step.retrieved->fragment_ids;
                    for (const auto& w : step.retrieved->warnings) err << "warning: turn " << current << ": " << w << "\n";
                } else {
                    row["retrieved"] = json::array();
                }
                out << row.dump() << "\n";
                state = std::move(step.state);
            }
            return kExitOk;
        }

        if (*sweep_cmd) {
            const auto loaded = load_index(sweep_index);
            const bool context_index = loaded.relation.kind == RelationKind::ContextStructure;
            if (!context_index && w_rels_opt->count()) {
                throw ConfigError(std::string("w_rel grid is inapplicable to a ") + to_string(loaded.relation.kind) +
                                  " relation index");
            }
            if (sweep_alphas.empty() || (context_index && sweep_w_rels.empty())) {
                throw ConfigError("sweep grid axes must be non-empty");
            }
            auto query = read_file(sweep_query_file);
            while (!query.empty() && (query.back() == '\n' || query.back() == '\r')) query.pop_back();
            auto cfg = default_retrieval_config(loaded);
            if (sweep_k_opt->count()) cfg.k = sweep_k;
            const auto baseline = retrieve_vanilla(query, loaded, cfg);
            for (const auto& w : baseline.warnings) err << "warning: " << w << "\n";
            const std::set<std::size_t> vanilla_set(baseline.selection.indices.begin(),
                                                    baseline.selection.indices.end());

            out << "alpha\tw_rel\tselected\toverlap\toverlap_fraction\n";
            const std::vector<std::optional<double>> w_axis = [&] {
                std::vector<std::optional<double>> axis;
                if (context_index) {
                    for (double w : sweep_w_rels) axis.emplace_back(w);
                } else {
                    axis.emplace_back(std::nullopt);
                }
                return axis;
            }();
            for (const auto& w : w_axis) {
                std::optional<Index> rebuilt;
                auto cell_cfg = cfg;
                if (w) {
                    cell_cfg.relation.w_rel = *w;
                    if (!(cell_cfg.relation == loaded.relation)) rebuilt = with_relation(loaded, cell_cfg.relation);
                }
                const Index& index = rebuilt ? *rebuilt : loaded;
                for (double alpha : sweep_alphas) {
                    cell_cfg.alpha = alpha;
                    const auto ctx = retrieve(query, index, cell_cfg);
                    std::size_t overlap = 0;
                    for (auto id : ctx.selection.indices) overlap += vanilla_set.count(id);
                    const double frac =
                        ctx.selection.indices.empty() ? 0.0 : double(overlap) / double(ctx.selection.indices.size());
                    out << format_number(alpha) << "\t" << (w ? format_number(*w) : std::string("-")) << "\t"
                        << format_ids(ctx.selection.indices) << "\t" << overlap << "\t" << format_number(frac) << "\n";
                }
            }
            return kExitOk;
        }
    } catch (const Error& e) {
        const int code = exit_code_for(e.kind());
        err << "fragmem-error code=" << code << " kind=" << to_string(e.kind()) << ": " << e.what() << "\n";
        return code;
    } catch (const std::exception& e) {
        err << "fragmem-error code=" << kExitInput << " kind=input: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitConfig;
}

} // namespace fragmem
