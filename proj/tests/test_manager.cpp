#include <gtest/gtest.h>

#include <random>

#include "fragmem/error.hpp"
#include "fragmem/manager.hpp"
#include "fragmem/text.hpp"
#include "synthetic.hpp"
#include "test_support.hpp"

using namespace fragmem;

namespace {

std::string numbered_story(std::size_t words) {
    static const char* vocab[] = {"river", "stone", "crow", "field", "lamp", "door", "bread", "cloud", "wheel", "salt"};
    std::mt19937 rng(static_cast<unsigned>(words));
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) s += ' ';
        s += vocab[rng() % 10];
    }
    return s;
}

GeneratorSpec stub(std::string reply) {
    GeneratorSpec g;
    g.callback = [reply](const std::string&) { return reply; };
    return g;
}

std::vector<ChatTurn> make_turns(std::size_t n) {
    std::vector<ChatTurn> turns;
    for (std::size_t i = 0; i < n; ++i) {
        turns.push_back({"question " + std::to_string(i) + " about topic" + std::to_string(i % 4),
                         "answer " + std::to_string(i), "t" + std::to_string(100 + i)});
    }
    return turns;
}

} // namespace

TEST(Retrieve, AlphaZeroMatchesVanilla) {
    const auto index = build_story_index(numbered_story(2000), [] {
        auto o = default_index_options(SourceKind::Story);
        o.story_split.words_per_fragment = 100;
        return o;
    }());
    auto cfg = default_retrieval_config(index);
    cfg.alpha = 0.0;
    for (const char* q : {"river crow", "salt bread wheel", "lamp"}) {
        const auto a = retrieve(q, index, cfg);
        const auto b = retrieve_vanilla(q, index, cfg);
        EXPECT_EQ(a.fragment_ids, b.fragment_ids);
        EXPECT_EQ(a.text, b.text);
    }
}

TEST(Retrieve, SelfRetrievalAndHandCosines) {
    auto opts = default_index_options(SourceKind::Story);
    opts.story_split.words_per_fragment = 40;
    const auto index = build_story_index(numbered_story(400), opts);
    const auto s = independent_scores(index.fragments[3].text, index, ScorerKind::EmbeddingCosine);
    EXPECT_EQ(std::max_element(s.begin(), s.end()) - s.begin(), 3);

    const std::vector<std::string> texts{"red fox", "blue fox jumps", "green"};
    auto small = default_index_options(SourceKind::Story);
    small.story_split.words_per_fragment = 2;
    const auto idx3 = build_story_index("red fox blue fox green", small);
    ASSERT_EQ(idx3.fragments.size(), 3u);
    const auto q = LocalHashEmbedder(opts.provider.dim, opts.provider.hash_seed).embed("fox green");
    const auto scores = independent_scores("fox green", idx3, ScorerKind::EmbeddingCosine);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& e = (*idx3.embeddings)[i].values;
        double dot = 0, nq = 0, ne = 0;
        for (std::size_t d = 0; d < e.size(); ++d) {
            dot += q.values[d] * e[d];
            nq += q.values[d] * q.values[d];
            ne += e[d] * e[d];
        }
        EXPECT_NEAR(scores[i], dot / std::sqrt(nq * ne), 1e-9);
    }
}

TEST(Retrieve, ScorerAndRelationMismatchesAreConfigErrors) {
    const auto index = build_story_index(numbered_story(300), default_index_options(SourceKind::Story));
    auto cfg = default_retrieval_config(index);
    cfg.scorer = ScorerKind::Bm25;
    EXPECT_THROW(retrieve("river", index, cfg), ConfigError);
    cfg = default_retrieval_config(index);
    cfg.relation.w_rel = 0.5;
    EXPECT_THROW(retrieve("river", index, cfg), ConfigError);
    const auto rebuilt = with_relation(index, cfg.relation);
    EXPECT_NO_THROW(retrieve("river", rebuilt, cfg));
    cfg.relation.kind = RelationKind::CodeStructure;
    EXPECT_THROW(with_relation(index, cfg.relation), ConfigError);
}

TEST(Retrieve, BudgetNeverExceeded) {
    auto opts = default_index_options(SourceKind::Story);
    opts.story_split.words_per_fragment = 30;
    const auto index = build_story_index(numbered_story(1500), opts);
    auto cfg = default_retrieval_config(index);
    for (std::size_t budget : {1u, 20u, 45u, 100u, 400u}) {
        cfg.context_token_budget = budget;
        const auto ctx = retrieve("river stone", index, cfg);
        EXPECT_LE(estimate_tokens(ctx.text, cfg.chars_per_token), budget);
        EXPECT_EQ(ctx.token_estimate, estimate_tokens(ctx.text, cfg.chars_per_token));
        EXPECT_LE(ctx.fragment_ids.size(), cfg.k);
    }
}

TEST(Retrieve, PositionOrderingSortsByLoc) {
    const auto turns = make_turns(20);
    const auto index = build_chat_index(turns, default_index_options(SourceKind::Chat));
    auto cfg = default_retrieval_config(index);
    EXPECT_EQ(cfg.ordering, Ordering::Position);
    const auto ctx = retrieve("topic2 answer 13", index, cfg);
    ASSERT_EQ(ctx.fragment_ids.size(), 8u);
    EXPECT_TRUE(std::is_sorted(ctx.fragment_ids.begin(), ctx.fragment_ids.end()));
    std::string expected;
    for (auto id : ctx.fragment_ids) expected += (expected.empty() ? "" : "\n\n") + index.fragments[id].text;
    EXPECT_EQ(ctx.text, expected);
    auto rank_cfg = cfg;
    rank_cfg.ordering = Ordering::Rank;
    EXPECT_EQ(retrieve("topic2 answer 13", index, rank_cfg).fragment_ids, ctx.selection.indices);
}

TEST(Retrieve, NeighborOfMatchingFragmentIsPulledIn) {
    const auto opts = default_index_options(SourceKind::Story);
    const auto corpus = testkit::make_neighbor_corpus(17, opts.provider);
    auto o = opts;
    o.story_split.words_per_fragment = corpus.words_per_fragment;
    const auto index = build_story_index(corpus.text, o);
    auto cfg = default_retrieval_config(index);
    cfg.k = 8;
    const auto vanilla = retrieve_vanilla(corpus.query, index, cfg);
    const auto related = retrieve(corpus.query, index, cfg);
    const auto has = [&](const RetrievedContext& c) {
        return std::find(c.fragment_ids.begin(), c.fragment_ids.end(), corpus.answer_fragment) != c.fragment_ids.end();
    };
    EXPECT_FALSE(has(vanilla));
    EXPECT_TRUE(has(related));
}

TEST(Retrieve, CodeFragmentsCarrySourceHeaders) {
    const auto files = testkit::load_repo("repo3");
    const auto index = build_code_index(files, default_index_options(SourceKind::Code));
    auto cfg = default_retrieval_config(index);
    EXPECT_EQ(cfg.k, 10u);
    EXPECT_EQ(cfg.scorer, ScorerKind::Bm25);
    const auto ctx = retrieve("def twice return add", index, cfg);
    EXPECT_EQ(ctx.text.rfind("# lib/math_utils.py:1-6\n", 0), 0u);
}

TEST(Retrieve, TailLines) {
    EXPECT_EQ(tail_lines("a\nb\nc\n", 2), "b\nc\n");
    EXPECT_EQ(tail_lines("a\nb", 5), "a\nb");
    EXPECT_EQ(tail_lines("a\nb", 0), "");
}

TEST(Iterative, SingleRoundEqualsRetrievePlusGeneration) {
    auto opts = default_index_options(SourceKind::Story);
    opts.story_split.words_per_fragment = 50;
    const auto index = build_story_index(numbered_story(800), opts);
    const auto cfg = default_retrieval_config(index);
    const auto res = iterative_retrieve("crow lamp", index, cfg, stub("done"), 1);
    ASSERT_EQ(res.rounds.size(), 1u);
    EXPECT_FALSE(res.error);
    EXPECT_EQ(res.rounds[0].context.text, retrieve("crow lamp", index, cfg).text);
    EXPECT_EQ(res.rounds[0].completion, "done");
}

TEST(Iterative, LaterRoundQueryIsSeedTailPlusCompletion) {
    auto opts = default_index_options(SourceKind::Story);
    opts.story_split.words_per_fragment = 50;
    const auto index = build_story_index(numbered_story(800), opts);
    const auto cfg = default_retrieval_config(index);
    std::string seed;
    for (int i = 0; i < 30; ++i) seed += "row" + std::to_string(i) + "\n";
    const auto res = iterative_retrieve(seed, index, cfg, stub("STUB"), 3, 20);
    ASSERT_EQ(res.rounds.size(), 3u);
    std::string tail;
    for (int i = 10; i < 30; ++i) tail += "row" + std::to_string(i) + "\n";
    EXPECT_EQ(res.rounds[1].query, tail + "\n" + "STUB");
    EXPECT_EQ(res.rounds[2].query, res.rounds[1].query);
    EXPECT_EQ(res.rounds[2].context.fragment_ids, res.rounds[1].context.fragment_ids);
}

TEST(Iterative, CompletionSteersNextRound) {
    auto opts = default_index_options(SourceKind::Story);
    opts.story_split.words_per_fragment = 20;
    std::string text = numbered_story(400);
    // plant a unique token in fragment 7 (words 140..159)
    auto words = whitespace_words(text);
    words[150] = "uniquemarker";
    text.clear();
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    const auto index = build_story_index(text, opts);
    auto cfg = default_retrieval_config(index);
    cfg.k = 3;
    const auto res = iterative_retrieve("zzz", index, cfg, stub("uniquemarker"), 2);
    ASSERT_EQ(res.rounds.size(), 2u);
    const auto& ids = res.rounds[1].context.fragment_ids;
    EXPECT_NE(std::find(ids.begin(), ids.end(), 7u), ids.end());
}

TEST(Iterative, GeneratorFailureKeepsCompletedRounds) {
    const auto index = build_story_index(numbered_story(300), default_index_options(SourceKind::Story));
    int calls = 0;
    GeneratorSpec g;
    g.callback = [&calls](const std::string&) -> std::string {
        if (++calls == 2) throw std::runtime_error("model offline");
        return "ok";
    };
    const auto res = iterative_retrieve("river", index, default_retrieval_config(index), g, 3);
    EXPECT_EQ(res.rounds.size(), 1u);
    ASSERT_TRUE(res.error);
    EXPECT_NE(res.error->find("model offline"), std::string::npos);
}

TEST(PromptTemplate, PlaceholdersExactlyOnce) {
    EXPECT_THROW(PromptTemplate("{context} only"), ConfigError);
    EXPECT_THROW(PromptTemplate("{instruction}{instruction}{context}"), ConfigError);
    EXPECT_EQ(PromptTemplate("Q: {instruction}\nC: {context}.").render("why", "because"), "Q: why\nC: because.");
    EXPECT_EQ(PromptTemplate().render("I", "C"), "C\n\nI");
}

TEST(ChatStep, ColdStartHasNoRetrieval) {
    const auto opts = default_index_options(SourceKind::Chat);
    const auto res = chat_step({}, "hello", "t0", default_chat_index_builder(opts), default_chat_config(), stub("hi"));
    EXPECT_FALSE(res.retrieved);
    EXPECT_EQ(res.state.live.size(), 1u);
    EXPECT_EQ(res.prompt, "\n\nhello");
    EXPECT_EQ(res.reply, "hi");
}

TEST(ChatStep, EleventhTurnSpillsBeforeRetrieval) {
    const auto opts = default_index_options(SourceKind::Chat);
    const auto builder = default_chat_index_builder(opts);
    const auto cfg = default_chat_config();
    ChatMemoryState state;
    const auto turns = make_turns(14);
    for (std::size_t i = 0; i < 10; ++i) {
        auto r = chat_step(state, turns[i].user, turns[i].timestamp, builder, cfg, stub(turns[i].assistant));
        EXPECT_EQ(r.spilled_now, 0u);
        state = r.state;
    }
    auto r = chat_step(state, turns[10].user, turns[10].timestamp, builder, cfg, stub(turns[10].assistant));
    EXPECT_EQ(r.spilled_now, 1u);
    EXPECT_EQ(r.state.spilled.size(), 1u);
    ASSERT_TRUE(r.retrieved);
    EXPECT_EQ(r.retrieved->fragment_ids, std::vector<std::size_t>{0});
    state = r.state;
    for (std::size_t i = 11; i < 14; ++i) {
        r = chat_step(state, turns[i].user, turns[i].timestamp, builder, cfg, stub(turns[i].assistant));
        state = r.state;
        EXPECT_LE(r.retrieved->fragment_ids.size(), 8u);
        EXPECT_TRUE(std::is_sorted(r.retrieved->fragment_ids.begin(), r.retrieved->fragment_ids.end()));
    }
    std::vector<ChatTurn> all = state.spilled;
    all.insert(all.end(), state.live.begin(), state.live.end());
    EXPECT_EQ(all, turns);
}

TEST(ChatStep, TokenLimitSpillsLongTurns) {
    const auto opts = default_index_options(SourceKind::Chat);
    ChatMemoryState state;
    state.thresholds = {50, 10};
    std::string long_msg;
    for (int i = 0; i < 60; ++i) long_msg += "word ";
    state.live.push_back({long_msg, "ok", "t0"});
    state.live.push_back({"short", "ok", "t1"});
    const auto r = chat_step(state, "next", "t2", default_chat_index_builder(opts), default_chat_config(), stub("r"));
    EXPECT_EQ(r.spilled_now, 1u);
    EXPECT_LE(live_window_tokens(std::vector<ChatTurn>(r.state.live.begin(), r.state.live.end() - 1)), 50u);
}

TEST(ChatStep, GeneratorFailureLeavesStateUntouched) {
    const auto opts = default_index_options(SourceKind::Chat);
    ChatMemoryState state;
    state.live = make_turns(3);
    const auto before = state.live;
    GeneratorSpec g;
    g.callback = [](const std::string&) -> std::string { throw std::runtime_error("down"); };
    EXPECT_THROW(chat_step(state, "x", "t", default_chat_index_builder(opts), default_chat_config(), g), GeneratorError);
    EXPECT_EQ(state.live, before);
}
