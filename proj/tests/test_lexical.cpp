#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <map>
#include <set>
#include <random>

#include "fragmem/error.hpp"
#include "fragmem/lexical.hpp"
#include "fragmem/text.hpp"

using namespace fragmem;

namespace {

std::vector<Fragment> corpus(const std::vector<std::string>& texts) {
    std::vector<Fragment> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Fragment f;
        f.id = f.loc = i;
        f.text = texts[i];
        out.push_back(f);
    }
    return out;
}

} // namespace

TEST(Bm25, DocumentFrequencyCounting) {
    const auto idx = build_bm25(corpus({"foo bar", "foo baz", "qux"}));
    EXPECT_EQ(idx.size(), 3u);
    EXPECT_EQ(idx.document_frequency("foo"), 2u);
    EXPECT_EQ(idx.document_frequency("qux"), 1u);
    EXPECT_EQ(idx.document_frequency("missing"), 0u);
}

TEST(Bm25, RebuildIsIdentical) {
    const auto c = corpus({"def f(x): return x", "class A: pass"});
    EXPECT_TRUE(build_bm25(c) == build_bm25(c));
}

TEST(Bm25, EmptyCorpusRejected) {
    EXPECT_THROW(build_bm25(std::vector<Fragment>{}), EmptyContextError);
}

TEST(Bm25, HandEvaluatedTwoDocumentCorpus) {
    // d0 tokens: apple x2, banana x1 (length 3); d1: banana, cherry (length 2); avgdl 2.5
    const auto idx = build_bm25(corpus({"apple banana apple", "banana cherry"}));
    const double k1 = 1.2, b = 0.75;
    const double idf_apple = std::log((2 - 1 + 0.5) / (1 + 0.5) + 1);   // ln 2
    const double idf_banana = std::log((2 - 2 + 0.5) / (2 + 0.5) + 1);  // ln 1.2
    const double norm0 = k1 * (1 - b + b * 3 / 2.5);
    const double norm1 = k1 * (1 - b + b * 2 / 2.5);
    const double d0 = idf_apple * (2 * (k1 + 1)) / (2 + norm0) + idf_banana * (1 * (k1 + 1)) / (1 + norm0);
    const double d1 = idf_banana * (1 * (k1 + 1)) / (1 + norm1);
    const auto s = bm25_scores("apple banana", idx);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_NEAR(s[0], d0, 1e-9);
    EXPECT_NEAR(s[1], d1, 1e-9);
    EXPECT_NEAR(idx.average_length(), 2.5, 1e-15);
}

TEST(Bm25, UniqueTermDominatesAndDisjointIsZero) {
    std::vector<std::string> texts(8, "common words here");
    texts[5] += " zebra";
    const auto idx = build_bm25(corpus(texts));
    const auto s = bm25_scores("zebra", idx);
    EXPECT_EQ(std::max_element(s.begin(), s.end()) - s.begin(), 5);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i != 5) EXPECT_EQ(s[i], 0.0);
    }
    for (double v : bm25_scores("", idx)) EXPECT_EQ(v, 0.0);
    for (double v : bm25_scores("nothing matches", idx)) EXPECT_EQ(v, 0.0);
}

TEST(Bm25, StatisticsRecountOnLargeCorpus) {
    std::mt19937 rng(1);
    static const char* ids[] = {"getValue", "set_value", "self", "return", "x1", "parseJSON", "index", "node"};
    std::vector<std::string> texts;
    for (int i = 0; i < 1600; ++i) {
        std::string t;
        const int n = 1 + rng() % 30;
        for (int k = 0; k < n; ++k) t += std::string(ids[rng() % 8]) + (rng() % 3 ? " " : "(");
        texts.push_back(t);
    }
    const auto idx = build_bm25(corpus(texts));
    EXPECT_EQ(idx.size(), 1600u);
    double total = 0;
    std::map<std::string, std::size_t> df;
    for (const auto& t : texts) {
        const auto toks = code_tokens(t);
        total += double(toks.size());
        std::set<std::string> uniq(toks.begin(), toks.end());
        for (const auto& u : uniq) ++df[u];
    }
    EXPECT_NEAR(idx.average_length(), total / 1600.0, 1e-9);
    for (const auto& [term, count] : df) EXPECT_EQ(idx.document_frequency(term), count) << term;
}

TEST(Bm25, AbsentQueryTermChangesNothingAndScoresNonNegative) {
    const auto idx = build_bm25(corpus({"alpha beta", "beta gamma delta", "alpha alpha"}));
    const auto a = bm25_scores("alpha gamma", idx);
    const auto b = bm25_scores("alpha gamma unseenterm", idx);
    EXPECT_EQ(a, b);
    for (double v : a) EXPECT_GE(v, 0.0);
}
