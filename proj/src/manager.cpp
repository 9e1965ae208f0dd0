#include "fragmem/manager.hpp"

#include <algorithm>

#include "fragmem/error.hpp"
#include "fragmem/text.hpp"

namespace fragmem {

const char* to_string(ScorerKind kind) {
    return kind == ScorerKind::Bm25 ? "bm25" : "embedding";
}

const char* to_string(Ordering ordering) {
    return ordering == Ordering::Position ? "position" : "rank";
}

ScorerKind scorer_kind_from_string(const std::string& name) {
    if (name == "embedding" || name == "embedding-cosine") return ScorerKind::EmbeddingCosine;
    if (name == "bm25") return ScorerKind::Bm25;
    throw ConfigError("unknown scorer '" + name + "' (expected embedding or bm25)");
}

Ordering ordering_from_string(const std::string& name) {
    if (name == "rank") return Ordering::Rank;
    if (name == "position") return Ordering::Position;
    throw ConfigError("unknown ordering '" + name + "' (expected rank or position)");
}

IndexOptions default_index_options(SourceKind kind) {
    IndexOptions opts;
    switch (kind) {
    case SourceKind::Story:
        opts.scorer = ScorerKind::EmbeddingCosine;
        opts.relation.kind = RelationKind::ContextStructure;
        opts.relation.w_rel = 0.3;
        break;
    case SourceKind::Chat:
        opts.scorer = ScorerKind::EmbeddingCosine;
        opts.relation.kind = RelationKind::ContextStructure;
        opts.relation.w_rel = 0.8;
        break;
    case SourceKind::Code:
        opts.scorer = ScorerKind::Bm25;
        opts.relation.kind = RelationKind::CodeStructure;
        break;
    }
    return opts;
}

namespace {

void add_artifacts(Index& index, const IndexOptions& opts) {
    validate(opts.relation);
    index.provider = opts.provider;
    index.relation = opts.relation;
    const bool need_embeddings =
        opts.scorer == ScorerKind::EmbeddingCosine || opts.relation.kind == RelationKind::Semantic;
    if (need_embeddings) {
        std::vector<std::string> texts;
        texts.reserve(index.fragments.size());
        for (const auto& f : index.fragments) texts.push_back(f.text);
        auto vectors = make_embedder(opts.provider)->embed_batch(texts);
        if (vectors.size() != texts.size()) {
            throw ProviderContractError("embedding provider returned " + std::to_string(vectors.size()) +
                                        " vectors for " + std::to_string(texts.size()) + " fragments");
        }
        index.embeddings = std::move(vectors);
    }
    if (opts.scorer == ScorerKind::Bm25) {
        index.bm25 = build_bm25(index.fragments);
    }
    if (opts.relation.kind == RelationKind::CodeStructure && !index.graph) {
        throw ConfigError("code-structure relation is only available for code indexes");
    }
    RelationInputs inputs;
    if (index.embeddings) inputs.embeddings = *index.embeddings;
    if (index.graph) inputs.graph = &*index.graph;
    inputs.assignments = index.assignments;
    index.matrix = build_relation_matrix(index.fragments, opts.relation, inputs);
}

} // namespace

Index build_story_index(const std::string& text, const IndexOptions& opts) {
    Index index;
    index.kind = SourceKind::Story;
    index.story_split = opts.story_split;
    index.fragments = split_story(text, opts.story_split);
    add_artifacts(index, opts);
    return index;
}

Index build_code_index(std::span<const SourceFile> files, const IndexOptions& opts) {
    Index index;
    index.kind = SourceKind::Code;
    index.code_split = opts.code_split;
    index.language = opts.language;
    auto split = split_code(files, opts.code_split);
    if (split.fragments.empty()) {
        throw EmptyContextError("no code fragments: every source file is empty");
    }
    index.fragments = std::move(split.fragments);
    index.diagnostics = std::move(split.warnings);

    index.graph = build_code_graph(files, opts.language);
    for (const auto& msg : index.graph->diagnostics().unparsed_files) {
        index.diagnostics.push_back("unparsed file " + msg);
    }
    if (index.graph->diagnostics().unresolved_calls > 0) {
        index.diagnostics.push_back("unresolved calls: " + std::to_string(index.graph->diagnostics().unresolved_calls));
    }
    index.assignments.reserve(index.fragments.size());
    for (const auto& frag : index.fragments) {
        index.assignments.push_back(map_fragment_to_nodes(*index.graph, frag));
    }
    add_artifacts(index, opts);
    return index;
}

Index build_chat_index(std::span<const ChatTurn> turns, const IndexOptions& opts) {
    Index index;
    index.kind = SourceKind::Chat;
    index.fragments = split_chat(turns);
    add_artifacts(index, opts);
    return index;
}

Index with_relation(const Index& index, const RelationSpec& spec) {
    Index out = index;
    out.relation = spec;
    RelationInputs inputs;
    if (out.embeddings) inputs.embeddings = *out.embeddings;
    if (out.graph) inputs.graph = &*out.graph;
    inputs.assignments = out.assignments;
    if (spec.kind == RelationKind::Semantic && !out.embeddings) {
        throw ConfigError("semantic relation needs fragment embeddings, which this index does not store");
    }
    if (spec.kind == RelationKind::CodeStructure && !out.graph) {
        throw ConfigError("code-structure relation needs a code graph, which this index does not store");
    }
    out.matrix = build_relation_matrix(out.fragments, spec, inputs);
    return out;
}

RetrievalConfig default_retrieval_config(const Index& index) {
    RetrievalConfig cfg;
    cfg.relation = index.relation;
    cfg.scorer = index.bm25 && !index.embeddings ? ScorerKind::Bm25 : ScorerKind::EmbeddingCosine;
    switch (index.kind) {
    case SourceKind::Story: cfg.k = 8; break;
    case SourceKind::Code: cfg.k = 10; break;
    case SourceKind::Chat:
        cfg.k = 8;
        cfg.ordering = Ordering::Position;
        break;
    }
    return cfg;
}

std::vector<double> independent_scores(const std::string& query, const Index& index, ScorerKind scorer) {
    if (scorer == ScorerKind::Bm25) {
        if (!index.bm25) {
            throw ConfigError("bm25 scorer requested but the index stores no BM25 statistics");
        }
        return index.bm25->scores(query);
    }
    if (!index.embeddings) {
        throw ConfigError("embedding scorer requested but the index stores no fragment embeddings");
    }
    const auto embedder = make_embedder(index.provider);
    const std::string texts[] = {query};
    const auto q = embedder->embed_batch(texts).at(0);
    std::vector<double> scores;
    scores.reserve(index.embeddings->size());
    for (const auto& e : *index.embeddings) {
        scores.push_back(cosine_similarity(q, e));
    }
    return scores;
}

std::string render_fragment(const Fragment& frag) {
    if (frag.source.kind == SourceKind::Code && frag.source.path && frag.source.line_range) {
        return "# " + *frag.source.path + ":" + std::to_string(frag.source.line_range->begin + 1) + "-" +
               std::to_string(frag.source.line_range->end) + "\n" + frag.text;
    }
    return frag.text;
}

std::string tail_lines(const std::string& text, std::size_t lines) {
    if (lines == 0) return {};
    const auto starts = line_offsets(text);
    if (starts.size() <= lines) return text;
    return text.substr(starts[starts.size() - lines]);
}

namespace {

void check_ready(const Index& index, const RetrievalConfig& cfg) {
    if (index.fragments.empty()) {
        throw ConfigError("index holds no fragments");
    }
    if (cfg.k == 0) {
        throw ConfigError("K must be >= 1");
    }
    if (!(cfg.alpha >= 0.0)) {
        throw ConfigError("alpha must be >= 0");
    }
    if (index.matrix.n() != index.fragments.size()) {
        throw ConfigError("index relation matrix covers " + std::to_string(index.matrix.n()) + " fragments, index has " +
                          std::to_string(index.fragments.size()));
    }
}

RetrievedContext assemble(const Index& index, const RetrievalConfig& cfg, TopKSelection selection, ScoreSet scores) {
    RetrievedContext ctx;
    if (selection.clamped) {
        ctx.warnings.push_back("K=" + std::to_string(cfg.k) + " exceeds the " + std::to_string(index.fragments.size()) +
                               " stored fragments; returning all of them");
    }
    std::vector<std::size_t> order = selection.indices;
    if (cfg.ordering == Ordering::Position) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return index.fragments[a].loc < index.fragments[b].loc;
        });
    }
    for (const std::size_t id : order) {
        std::string candidate = ctx.text;
        if (!ctx.fragment_ids.empty()) candidate += cfg.separator;
        candidate += render_fragment(index.fragments[id]);
        const std::size_t tokens = estimate_tokens(candidate, cfg.chars_per_token);
        if (cfg.context_token_budget && tokens > *cfg.context_token_budget) {
            ctx.warnings.push_back("context token budget reached; dropped " +
                                   std::to_string(order.size() - ctx.fragment_ids.size()) + " trailing fragment(s)");
            break;
        }
        ctx.text = std::move(candidate);
        ctx.token_estimate = tokens;
        ctx.fragment_ids.push_back(id);
    }
    ctx.selection = std::move(selection);
    ctx.scores = std::move(scores);
    return ctx;
}

} // namespace

RetrievedContext retrieve(const std::string& query, const Index& index, const RetrievalConfig& cfg) {
    check_ready(index, cfg);
    if (!(cfg.relation == index.relation)) {
        throw ConfigError(std::string("index relation matrix was built for ") + to_string(index.relation.kind) +
                          " (w_rel=" + std::to_string(index.relation.w_rel) + ") but the config requests " +
                          to_string(cfg.relation.kind) + " (w_rel=" + std::to_string(cfg.relation.w_rel) + ")");
    }
    auto scores = score_all(independent_scores(query, index, cfg.scorer), index.matrix, cfg.alpha);
    auto selection = top_k(scores.s_rel, cfg.k);
    return assemble(index, cfg, std::move(selection), std::move(scores));
}

RetrievedContext retrieve_vanilla(const std::string& query, const Index& index, const RetrievalConfig& cfg) {
    check_ready(index, cfg);
    ScoreSet scores;
    scores.s_ind = independent_scores(query, index, cfg.scorer);
    scores.s_env.assign(scores.s_ind.size(), 0.0);
    scores.s_rel = scores.s_ind;
    auto selection = top_k(scores.s_ind, cfg.k);
    return assemble(index, cfg, std::move(selection), std::move(scores));
}

IterativeResult iterative_retrieve(const std::string& seed_query, const Index& index, const RetrievalConfig& cfg,
                                   const GeneratorSpec& generator, std::size_t rounds, std::size_t tail_window) {
    if (rounds == 0) {
        throw ConfigError("iterative retrieval needs rounds >= 1");
    }
    IterativeResult result;
    const std::string seed_tail = tail_lines(seed_query, tail_window);
    std::string query = seed_query;
    for (std::size_t round = 0; round < rounds; ++round) {
        if (round > 0) {
            query = seed_tail + "\n" + result.rounds.back().completion;
        }
        IterationRound r;
        r.query = query;
        r.context = retrieve(query, index, cfg);
        try {
            r.completion = generate(generator, generator.prompt_template.render(seed_query, r.context.text));
        } catch (const GeneratorError& e) {
            result.error = "round " + std::to_string(round + 1) + ": " + e.what();
            return result;
        }
        result.rounds.push_back(std::move(r));
    }
    return result;
}

ChatIndexBuilder default_chat_index_builder(const IndexOptions& opts) {
    return [opts](std::span<const ChatTurn> turns) { return build_chat_index(turns, opts); };
}

ChatConfig default_chat_config() {
    ChatConfig cfg;
    cfg.retrieval.k = 8;
    cfg.retrieval.alpha = 0.5;
    cfg.retrieval.ordering = Ordering::Position;
    cfg.retrieval.scorer = ScorerKind::EmbeddingCosine;
    cfg.retrieval.relation = default_index_options(SourceKind::Chat).relation;
    return cfg;
}

std::size_t live_window_tokens(std::span<const ChatTurn> live, double chars_per_token) {
    std::size_t total = 0;
    for (const auto& t : live) total += estimate_tokens(chat_turn_text(t), chars_per_token);
    return total;
}

ChatStepResult chat_step(const ChatMemoryState& state, const std::string& user_msg, const std::string& timestamp,
                         const ChatIndexBuilder& index_builder, const ChatConfig& cfg, const GeneratorSpec& generator) {
    if (state.thresholds.turn_limit == 0) {
        throw ConfigError("chat turn limit must be >= 1");
    }
    ChatStepResult out;
    out.state = state;
    auto& next = out.state;
    const auto over_limit = [&] {
        return next.live.size() + 1 > next.thresholds.turn_limit ||
               live_window_tokens(next.live, cfg.chars_per_token) > next.thresholds.token_limit;
    };
    while (!next.live.empty() && over_limit()) {
        next.spilled.push_back(std::move(next.live.front()));
        next.live.erase(next.live.begin());
        ++out.spilled_now;
    }
    if (out.spilled_now > 0 || (!next.spilled.empty() && !next.memory)) {
        next.memory = index_builder(next.spilled);
    }

    std::string context;
    if (next.memory && !next.spilled.empty()) {
        std::string query = next.live.empty() ? std::string() : chat_turn_text(next.live.back()) + "\n";
        query += "User: " + user_msg;
        out.retrieved = retrieve(query, *next.memory, cfg.retrieval);
        context = out.retrieved->text;
    }
    std::string live_text;
    for (const auto& t : next.live) {
        if (!live_text.empty()) live_text += "\n";
        live_text += chat_turn_text(t);
    }
    if (!live_text.empty()) {
        if (!context.empty()) context += "\n\n";
        context += live_text;
    }
    out.prompt = generator.prompt_template.render(user_msg, context);
    out.reply = generate(generator, out.prompt);
    next.live.push_back({user_msg, out.reply, timestamp});
    return out;
}

} // namespace fragmem
