#include <gtest/gtest.h>

#include <map>

#include "dcnet/random.hpp"
#include "dcnet/weak_labeler.hpp"

using namespace dcnet;

namespace {

// Written directly from the rule text, without the library's helpers:
//   more positive than negative words -> literal positive, fewer -> negative;
//   non-sarcastic -> implied equals literal, sarcastic -> implied is the other;
//   equal counts -> no auxiliary labels.
struct Expected {
    bool mask;
    const char* literal;
    const char* implied;
};

Expected oracle(int n_pos, int n_neg, int y_s) {
    if (n_pos == n_neg) return {false, nullptr, nullptr};
    const char* lit = n_pos > n_neg ? "positive" : "negative";
    const char* other = n_pos > n_neg ? "negative" : "positive";
    return {true, lit, y_s == 1 ? other : lit};
}

}  // namespace

TEST(CountPolarities, Examples) {
    SentimentLexicon lex;
    lex.insert("best", Polarity::Positive);
    lex.insert("gift", Polarity::Positive);
    auto c = count_polarities({"best", "gift", "exam"}, lex);
    EXPECT_EQ(c.n_pos, 2u);
    EXPECT_EQ(c.n_neg, 0u);
    auto z = count_polarities({}, lex);
    EXPECT_EQ(z.n_pos + z.n_neg, 0u);
}

TEST(CountPolarities, MatchesNaiveLoop) {
    Rng rng(5);
    SentimentLexicon lex;
    std::map<std::string, int> sign;
    for (int i = 0; i < 30; ++i) {
        std::string w = "s" + std::to_string(i);
        int s = i % 2 ? 1 : -1;
        lex.insert(w, s > 0 ? Polarity::Positive : Polarity::Negative);
        sign[w] = s;
    }
    for (int trial = 0; trial < 500; ++trial) {
        TokenSequence toks(rng.index(20));
        for (auto& t : toks) t = "s" + std::to_string(rng.index(60));
        std::size_t pos = 0, neg = 0;
        for (const auto& t : toks) {
            auto it = sign.find(t);
            if (it == sign.end()) continue;
            (it->second > 0 ? pos : neg)++;
        }
        auto c = count_polarities(toks, lex);
        ASSERT_EQ(c.n_pos, pos);
        ASSERT_EQ(c.n_neg, neg);
    }
}

TEST(WeakLabels, Examples) {
    auto a = weak_labels({2, 0}, 1);
    EXPECT_TRUE(a.aux_mask);
    EXPECT_EQ(a.y_l, Polarity::Positive);
    EXPECT_EQ(a.y_d, Polarity::Negative);

    auto b = weak_labels({1, 3}, 0);
    EXPECT_TRUE(b.aux_mask);
    EXPECT_EQ(b.y_l, Polarity::Negative);
    EXPECT_EQ(b.y_d, Polarity::Negative);

    auto c = weak_labels({2, 2}, 1);
    EXPECT_FALSE(c.aux_mask);
    EXPECT_FALSE(c.y_l.has_value());
    EXPECT_FALSE(c.y_d.has_value());
}

TEST(WeakLabels, ExhaustiveAgreementWithRuleOracle) {
    int checked = 0, agree = 0;
    for (int p = 0; p <= 5; ++p)
        for (int n = 0; n <= 5; ++n)
            for (int y = 0; y <= 1; ++y) {
                auto got = weak_labels({static_cast<std::size_t>(p), static_cast<std::size_t>(n)}, y);
                auto want = oracle(p, n, y);
                ++checked;
                bool ok = got.y_s == y && got.aux_mask == want.mask && got.y_l.has_value() == want.mask &&
                          got.y_d.has_value() == want.mask;
                if (ok && want.mask)
                    ok = to_string(*got.y_l) == want.literal && to_string(*got.y_d) == want.implied;
                agree += ok;
                EXPECT_TRUE(ok) << "n_pos=" << p << " n_neg=" << n << " y_s=" << y;
            }
    EXPECT_EQ(checked, 72);
    EXPECT_EQ(agree, checked);
}

TEST(WeakLabels, SarcasticImpliedAlwaysOpposesLiteral) {
    for (std::size_t p = 0; p <= 5; ++p)
        for (std::size_t n = 0; n <= 5; ++n) {
            auto l = weak_labels({p, n}, 1);
            if (l.aux_mask) {
                EXPECT_NE(*l.y_l, *l.y_d);
            }
            auto m = weak_labels({p, n}, 0);
            if (m.aux_mask) {
                EXPECT_EQ(*m.y_l, *m.y_d);
            }
        }
}

TEST(WeakLabels, CountsUseFullTextEvenOnFallback) {
    SentimentLexicon lex;
    lex.insert("sad", Polarity::Negative);
    auto d = decompose("so sad", lex);
    auto l = weak_labels(d, lex, 1);
    EXPECT_EQ(l.y_l, Polarity::Negative);
    EXPECT_EQ(l.y_d, Polarity::Positive);
}

TEST(ClassIndex, PositiveIsOne) {
    EXPECT_EQ(class_index(Polarity::Positive), 1);
    EXPECT_EQ(class_index(Polarity::Negative), 0);
}
