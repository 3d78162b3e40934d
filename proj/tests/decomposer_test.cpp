#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "dcnet/decomposer.hpp"
#include "dcnet/random.hpp"

using namespace dcnet;

TEST(Tokenize, Examples) {
    EXPECT_EQ(tokenize("Final exam!"), (TokenSequence{"final", "exam", "!"}));
    EXPECT_EQ(tokenize(""), TokenSequence{});
    EXPECT_EQ(tokenize("Best GIFT"), (TokenSequence{"best", "gift"}));
}

TEST(Tokenize, PunctuationAndMarkers) {
    EXPECT_EQ(tokenize("  \"Wow...\"  "), (TokenSequence{"\"", "wow", ".", ".", ".", "\""}));
    EXPECT_EQ(tokenize("#Blessed @Bob don't"), (TokenSequence{"#blessed", "@bob", "don't"}));
    EXPECT_EQ(tokenize("\t\n "), TokenSequence{});
    EXPECT_EQ(tokenize("?!"), (TokenSequence{"?", "!"}));
}

TEST(Tokenize, NonAsciiBytesStayInWord) {
    EXPECT_EQ(tokenize("caf\xc3\xa9!"), (TokenSequence{"caf\xc3\xa9", "!"}));
    EXPECT_EQ(tokenize("\xf0\x9f\x99\x84"), (TokenSequence{"\xf0\x9f\x99\x84"}));
}

TEST(Decompose, PaperSentence) {
    SentimentLexicon lex;
    lex.insert("best", Polarity::Positive);
    lex.insert("gift", Polarity::Positive);
    auto d = decompose("final exam is the best gift on my birthday", lex);
    EXPECT_EQ(d.w_l, (TokenSequence{"best", "gift"}));
    EXPECT_EQ(d.w_d, (TokenSequence{"final", "exam", "is", "the", "on", "my", "birthday"}));
    EXPECT_FALSE(d.fallback_used);
    EXPECT_EQ(d.w_t.size(), 9u);
}

TEST(Decompose, FallbackCopiesText) {
    SentimentLexicon empty;
    auto d = decompose(TokenSequence{"the", "exam", "happens"}, empty);
    EXPECT_TRUE(d.fallback_used);
    EXPECT_EQ(d.w_l, d.w_t);
    EXPECT_EQ(d.w_d, d.w_t);
}

TEST(Decompose, AllSentimentLeavesImpliedEmpty) {
    SentimentLexicon lex;
    lex.insert("great", Polarity::Positive);
    auto d = decompose(TokenSequence{"great", "great"}, lex);
    EXPECT_FALSE(d.fallback_used);
    EXPECT_EQ(d.w_l.size(), 2u);
    EXPECT_TRUE(d.w_d.empty());
}

TEST(Decompose, EmptyInputIsFallback) {
    SentimentLexicon lex;
    lex.insert("great", Polarity::Positive);
    auto d = decompose(TokenSequence{}, lex);
    EXPECT_TRUE(d.fallback_used);
    EXPECT_TRUE(d.w_l.empty() && d.w_d.empty());
}

// 1000 random sequences, each against its own random 50-word lexicon.
TEST(Decompose, PartitionProperty) {
    Rng rng(99);
    std::vector<std::string> pool;
    for (int i = 0; i < 200; ++i) pool.push_back("t" + std::to_string(i));
    auto multiset = [](const TokenSequence& s) {
        std::map<std::string, int> m;
        for (const auto& t : s) ++m[t];
        return m;
    };
    int violations = 0, fallbacks = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        SentimentLexicon lex;
        while (lex.size() < 50)
            lex.insert(pool[rng.index(pool.size())], rng.bernoulli(0.5) ? Polarity::Positive : Polarity::Negative);
        TokenSequence toks(rng.index(30));
        for (auto& t : toks) t = pool[rng.index(pool.size())];
        auto d = decompose(toks, lex);
        if (d.w_t != toks) ++violations;
        if (d.fallback_used) {
            ++fallbacks;
            if (d.w_l != toks || d.w_d != toks) ++violations;
            if (std::any_of(toks.begin(), toks.end(), [&](const auto& t) { return lex.contains(t); })) ++violations;
            continue;
        }
        auto lit = multiset(d.w_l);
        for (auto& [k, v] : multiset(d.w_d)) lit[k] += v;
        if (lit != multiset(toks)) ++violations;
        for (const auto& t : d.w_l) violations += !lex.contains(t);
        for (const auto& t : d.w_d) violations += lex.contains(t);
    }
    EXPECT_EQ(violations, 0);
    EXPECT_GT(fallbacks, 0);
    EXPECT_LT(fallbacks, 1000);
}

TEST(Decompose, ChannelsKeepTextOrder) {
    SentimentLexicon lex;
    lex.insert("love", Polarity::Positive);
    lex.insert("hate", Polarity::Negative);
    auto d = decompose("I hate mondays but love fridays", lex);
    EXPECT_EQ(d.w_l, (TokenSequence{"hate", "love"}));
    EXPECT_EQ(d.w_d, (TokenSequence{"i", "mondays", "but", "fridays"}));
}
