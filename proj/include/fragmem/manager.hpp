#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fragmem/codegraph.hpp"
#include "fragmem/embeddings.hpp"
#include "fragmem/fragments.hpp"
#include "fragmem/generator.hpp"
#include "fragmem/lexical.hpp"
#include "fragmem/relations.hpp"
#include "fragmem/scoring.hpp"

namespace fragmem {

enum class ScorerKind { EmbeddingCosine, Bm25 };
enum class Ordering { Rank, Position };

const char* to_string(ScorerKind kind);
const char* to_string(Ordering ordering);
ScorerKind scorer_kind_from_string(const std::string& name);
Ordering ordering_from_string(const std::string& name);

/// Everything retrieval needs for one long context: fragments, scorer
/// artifacts and the relation matrix (plus the code graph for code sources).
struct Index {
    SourceKind kind = SourceKind::Story;
    StorySplitConfig story_split;
    CodeSplitConfig code_split;
    std::string language = "python";

    std::vector<Fragment> fragments;
    EmbeddingProviderSpec provider;
    std::optional<std::vector<EmbeddingVector>> embeddings;
    std::optional<Bm25Index> bm25;

    RelationSpec relation;
    RelationMatrix matrix;

    std::optional<CodeGraph> graph;
    std::vector<NodeSpanAssignment> assignments;

    std::vector<std::string> diagnostics;
};

struct IndexOptions {
    StorySplitConfig story_split;
    CodeSplitConfig code_split;
    std::string language = "python";
    EmbeddingProviderSpec provider;
    ScorerKind scorer = ScorerKind::EmbeddingCosine;
    RelationSpec relation;
};

/// Defaults per source kind: story = embeddings + context relation (w_rel 0.3),
/// chat = embeddings + context relation (w_rel 0.8), code = BM25 + code relation.
IndexOptions default_index_options(SourceKind kind);

Index build_story_index(const std::string& text, const IndexOptions& opts);
Index build_code_index(std::span<const SourceFile> files, const IndexOptions& opts);
Index build_chat_index(std::span<const ChatTurn> turns, const IndexOptions& opts);

/// Copy of `index` whose matrix is rebuilt for `spec` from the stored artifacts.
Index with_relation(const Index& index, const RelationSpec& spec);

struct RetrievalConfig {
    std::size_t k = 8;
    double alpha = 0.5;
    RelationSpec relation;
    ScorerKind scorer = ScorerKind::EmbeddingCosine;
    Ordering ordering = Ordering::Rank;
    std::optional<std::size_t> context_token_budget;
    double chars_per_token = 4.0;
    std::string separator = "\n\n";
};

/// Retrieval config matching an index's own relation and scorer.
RetrievalConfig default_retrieval_config(const Index& index);

struct RetrievedContext {
    std::vector<std::size_t> fragment_ids;  // output order
    std::string text;
    std::size_t token_estimate = 0;
    ScoreSet scores;
    TopKSelection selection;
    std::vector<std::string> warnings;
};

std::vector<double> independent_scores(const std::string& query, const Index& index, ScorerKind scorer);

/// Independent scores -> environment scores -> relation-aware scores -> top K,
/// then ordering and the optional token budget.
RetrievedContext retrieve(const std::string& query, const Index& index, const RetrievalConfig& cfg);

/// Ranking by independent scores only (relations ignored); same assembly rules.
RetrievedContext retrieve_vanilla(const std::string& query, const Index& index, const RetrievalConfig& cfg);

/// Text of one fragment as it appears in assembled context (code gets a
/// "# path:first-last" header line).
std::string render_fragment(const Fragment& frag);

/// Last `lines` lines of `text`.
std::string tail_lines(const std::string& text, std::size_t lines);

struct IterationRound {
    std::string query;
    RetrievedContext context;
    std::string completion;
};

struct IterativeResult {
    std::vector<IterationRound> rounds;
    std::optional<std::string> error;  // set when the generator failed; rounds holds the completed prefix
};

/// Round 1 queries with the seed; round t > 1 queries with the seed's last
/// `tail_window` lines, a newline, then round t-1's completion.
IterativeResult iterative_retrieve(const std::string& seed_query, const Index& index, const RetrievalConfig& cfg,
                                   const GeneratorSpec& generator, std::size_t rounds, std::size_t tail_window = 20);

struct ChatThresholds {
    std::size_t token_limit = 1000;
    std::size_t turn_limit = 10;
};

struct ChatMemoryState {
    std::vector<ChatTurn> live;
    std::vector<ChatTurn> spilled;
    ChatThresholds thresholds;
    std::optional<Index> memory;
};

using ChatIndexBuilder = std::function<Index(std::span<const ChatTurn>)>;

ChatIndexBuilder default_chat_index_builder(const IndexOptions& opts);

struct ChatConfig {
    RetrievalConfig retrieval;
    double chars_per_token = 4.0;
};

/// K = 8, position ordering, context relation with w_rel 0.8, alpha 0.5.
ChatConfig default_chat_config();

struct ChatStepResult {
    std::string reply;
    ChatMemoryState state;
    std::size_t spilled_now = 0;
    std::optional<RetrievedContext> retrieved;
    std::string prompt;
};

std::size_t live_window_tokens(std::span<const ChatTurn> live, double chars_per_token = 4.0);

/// One conversational turn: spill oldest live turns while the round count would
/// pass turn_limit or the live window exceeds token_limit, retrieve from the
/// spilled memory against the last turn plus the new message, generate, and
/// append the completed turn. The input state is never modified.
ChatStepResult chat_step(const ChatMemoryState& state, const std::string& user_msg, const std::string& timestamp,
                         const ChatIndexBuilder& index_builder, const ChatConfig& cfg, const GeneratorSpec& generator);

} // namespace fragmem
