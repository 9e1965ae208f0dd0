#include <gtest/gtest.h>

#include <random>

#include "fragmem/error.hpp"
#include "fragmem/fragments.hpp"
#include "fragmem/text.hpp"
#include "test_support.hpp"

using namespace fragmem;

namespace {

std::string lorem(std::size_t words, unsigned seed) {
    static const char* vocab[] = {"lorem", "ipsum", "dolor", "sit", "amet", "consectetur", "adipiscing", "elit"};
    std::mt19937 rng(seed);
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) s += (rng() % 7 == 0) ? "\n" : " ";
        s += vocab[rng() % 8];
    }
    return s;
}

std::size_t count_words_by_hand(const std::string& s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        const bool ws = c == ' ' || c == '\n' || c == '\t' || c == '\r';
        if (!ws && !in_word) ++n;
        in_word = !ws;
    }
    return n;
}

} // namespace

TEST(Text, WhitespaceWordsHandleUnicodeSpaces) {
    // U+00A0 no-break space, U+3000 ideographic space, U+2009 thin space
    const std::string s = "a\xC2\xA0" "b\xE3\x80\x80" "c\xE2\x80\x89" "d  e\n";
    EXPECT_EQ(whitespace_words(s), (std::vector<std::string>{"a", "b", "c", "d", "e"}));
}

TEST(Text, CodeTokensSplitIdentifiers) {
    EXPECT_EQ(code_tokens("parseHTTPResponse(snake_case_name, x2y)"),
              (std::vector<std::string>{"parse", "http", "response", "snake", "case", "name", "x", "2", "y"}));
}

TEST(Text, TokenEstimateIsPerWordCeiling) {
    EXPECT_EQ(estimate_tokens("", 4.0), 0u);
    EXPECT_EQ(estimate_tokens("a abcd abcde", 4.0), 1u + 1u + 2u);
}

TEST(SplitStory, TwelveHundredWordsMakeThreeFragments) {
    const auto text = lorem(1200, 7);
    ASSERT_EQ(count_words_by_hand(text), 1200u);
    const auto frags = split_story(text, {500});
    ASSERT_EQ(frags.size(), 3u);
    EXPECT_EQ(count_words_by_hand(frags[0].text), 500u);
    EXPECT_EQ(count_words_by_hand(frags[1].text), 500u);
    EXPECT_EQ(count_words_by_hand(frags[2].text), 200u);
    for (std::size_t i = 0; i < frags.size(); ++i) {
        EXPECT_EQ(frags[i].id, i);
        EXPECT_EQ(frags[i].loc, i);
        EXPECT_EQ(frags[i].source.kind, SourceKind::Story);
        EXPECT_FALSE(frags[i].source.path);
        EXPECT_FALSE(frags[i].source.line_range);
        EXPECT_FALSE(frags[i].source.turn_index);
    }
}

TEST(SplitStory, ExactSizeIsIdentity) {
    const auto text = lorem(500, 3);
    const auto frags = split_story(text, {500});
    ASSERT_EQ(frags.size(), 1u);
    EXPECT_EQ(frags[0].text, text);
}

TEST(SplitStory, EmptyTextIsRejected) {
    EXPECT_THROW(split_story("", {500}), EmptyContextError);
    EXPECT_THROW(split_story(" \n\t ", {500}), EmptyContextError);
    EXPECT_THROW(split_story("word", {0}), ConfigError);
}

TEST(SplitStory, PartitionPropertyOnRandomTexts) {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t words = 1 + rng() % 900;
        const std::size_t per = 1 + rng() % 120;
        const auto text = lorem(words, static_cast<unsigned>(trial));
        const auto frags = split_story(text, {per});
        std::vector<std::string> joined;
        for (std::size_t i = 0; i < frags.size(); ++i) {
            const auto w = whitespace_words(frags[i].text);
            if (i + 1 < frags.size()) EXPECT_EQ(w.size(), per);
            EXPECT_FALSE(frags[i].text.empty());
            joined.insert(joined.end(), w.begin(), w.end());
        }
        EXPECT_EQ(joined, whitespace_words(text));
    }
}

TEST(SplitCode, FortyLinesGiveThreeWindows) {
    const std::vector<SourceFile> files{{"a.py", testkit::numbered_lines(40)}};
    const auto res = split_code(files, {20, 10});
    ASSERT_EQ(res.fragments.size(), 3u);
    EXPECT_EQ(*res.fragments[0].source.line_range, (Range{0, 20}));
    EXPECT_EQ(*res.fragments[1].source.line_range, (Range{10, 30}));
    EXPECT_EQ(*res.fragments[2].source.line_range, (Range{20, 40}));
    EXPECT_EQ(res.fragments[0].text.substr(0, 7), "line 0\n");
}

TEST(SplitCode, TwentyLinesGiveOneWindow) {
    const std::vector<SourceFile> files{{"a.py", testkit::numbered_lines(20)}};
    EXPECT_EQ(split_code(files, {20, 10}).fragments.size(), 1u);
}

TEST(SplitCode, TwentyFiveLinesGiveTwoWindows) {
    const std::vector<SourceFile> files{{"a.py", testkit::numbered_lines(25)}};
    const auto res = split_code(files, {20, 10});
    ASSERT_EQ(res.fragments.size(), 2u);
    EXPECT_EQ(*res.fragments[0].source.line_range, (Range{0, 20}));
    EXPECT_EQ(*res.fragments[1].source.line_range, (Range{10, 25}));
}

TEST(SplitCode, FilesOrderedByPathAndEmptyFilesWarned) {
    const std::vector<SourceFile> files{
        {"z.py", testkit::numbered_lines(3)}, {"empty.py", ""}, {"a.py", testkit::numbered_lines(3)}};
    const auto res = split_code(files, {20, 10});
    ASSERT_EQ(res.fragments.size(), 2u);
    EXPECT_EQ(*res.fragments[0].source.path, "a.py");
    EXPECT_EQ(*res.fragments[1].source.path, "z.py");
    EXPECT_EQ(res.fragments[1].loc, 1u);
    ASSERT_EQ(res.warnings.size(), 1u);
    EXPECT_NE(res.warnings[0].find("empty.py"), std::string::npos);
}

TEST(SplitCode, WindowPropertyOnRandomFiles) {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t sw = 1 + rng() % 25;
        const std::size_t ss = rng() % sw;
        const std::size_t lines = 1 + rng() % 120;
        const std::vector<SourceFile> files{{"f.py", testkit::numbered_lines(lines)}};
        const auto res = split_code(files, {sw, ss});
        const std::size_t stride = sw - ss;
        for (std::size_t k = 0; k < res.fragments.size(); ++k) {
            const auto r = *res.fragments[k].source.line_range;
            EXPECT_EQ(r.begin, k * stride);
            EXPECT_EQ(r.end, std::min(k * stride + sw, lines));
            if (k + 1 < res.fragments.size() && ss > 0) {
                const auto cur = res.fragments[k].text;
                const auto nxt = res.fragments[k + 1].text;
                std::string tail, head;
                for (std::size_t l = r.end - ss; l < r.end; ++l) tail += "line " + std::to_string(l) + "\n";
                head = nxt.substr(0, tail.size());
                EXPECT_EQ(cur.substr(cur.size() - tail.size()), tail);
                EXPECT_EQ(head, tail);
            }
        }
        EXPECT_EQ(res.fragments.back().source.line_range->end, lines);
    }
}

TEST(SplitCode, OverlapMustBeSmallerThanWindow) {
    const std::vector<SourceFile> files{{"a.py", "x\n"}};
    EXPECT_THROW(split_code(files, {10, 10}), ConfigError);
    EXPECT_THROW(split_code(files, {0, 0}), ConfigError);
}

TEST(SplitChat, OneFragmentPerTurn) {
    std::vector<ChatTurn> turns;
    for (int i = 0; i < 12; ++i) turns.push_back({"u" + std::to_string(i), "a" + std::to_string(i), "t"});
    const auto frags = split_chat(turns);
    ASSERT_EQ(frags.size(), 12u);
    for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_EQ(frags[i].loc, i);
        EXPECT_EQ(*frags[i].source.turn_index, i);
    }
}

TEST(SplitChat, SingleTurnCarriesBothRoles) {
    const std::vector<ChatTurn> turns{{"hello there", "hi back", "2024-01-01T00:00:00Z"}};
    const auto frags = split_chat(turns);
    ASSERT_EQ(frags.size(), 1u);
    EXPECT_EQ(frags[0].text, "User: hello there\nAssistant: hi back");
}

TEST(SplitChat, NonMonotoneTimestampsPreserved) {
    const std::vector<ChatTurn> turns{{"a", "b", "2024-03-01"}, {"c", "d", "2023-01-01"}, {"e", "f", "2025-07-01"}};
    const auto frags = split_chat(turns);
    ASSERT_EQ(frags.size(), 3u);
    EXPECT_EQ(*frags[0].source.timestamp, "2024-03-01");
    EXPECT_EQ(*frags[1].source.timestamp, "2023-01-01");
    EXPECT_EQ(*frags[2].source.timestamp, "2025-07-01");
    EXPECT_EQ(frags[1].loc, 1u);
    EXPECT_THROW(split_chat(std::vector<ChatTurn>{}), EmptyContextError);
}

TEST(Text, LineOffsetsIgnoreTrailingNewline) {
    EXPECT_EQ(line_offsets("a\nb\n"), (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(line_offsets("a\nb"), (std::vector<std::size_t>{0, 2}));
    EXPECT_TRUE(line_offsets("").empty());
}
