#ifndef DCNET_DECOMPOSER_HPP
#define DCNET_DECOMPOSER_HPP

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "dcnet/lexicon.hpp"

namespace dcnet {

// Ordered lowercase tokens; never contains an empty string.
using TokenSequence = std::vector<std::string>;

struct DecomposedExample {
    TokenSequence w_t;  // full text
    TokenSequence w_l;  // literal channel: sentiment words
    TokenSequence w_d;  // implied channel: everything else
    bool fallback_used = false;
};

namespace detail {

// Hashtag and mention markers stay attached to their word; bytes >= 0x80
// (emoji, accented letters) are never punctuation.
inline bool is_split_punct(char c) {
    auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u) && c != '#' && c != '@';
}

}  // namespace detail

// Lowercases, splits on whitespace, and peels leading/trailing punctuation
// off each chunk as one token per character.
inline TokenSequence tokenize(std::string_view text) {
    TokenSequence out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (start == i) break;
        std::string chunk = to_lower(text.substr(start, i - start));

        std::size_t lo = 0, hi = chunk.size();
        while (lo < hi && detail::is_split_punct(chunk[lo])) ++lo;
        while (hi > lo && detail::is_split_punct(chunk[hi - 1])) --hi;
        for (std::size_t k = 0; k < lo; ++k) out.emplace_back(1, chunk[k]);
        if (hi > lo) out.push_back(chunk.substr(lo, hi - lo));
        for (std::size_t k = hi; k < chunk.size(); ++k) out.emplace_back(1, chunk[k]);
    }
    return out;
}

// Routes lexicon hits to the literal channel and the rest to the implied
// channel. Text with no hits goes to both channels unchanged.
inline DecomposedExample decompose(const TokenSequence& tokens, const SentimentLexicon& lex) {
    DecomposedExample ex;
    ex.w_t = tokens;
    for (const auto& tok : tokens) {
        if (lex.contains(tok))
            ex.w_l.push_back(tok);
        else
            ex.w_d.push_back(tok);
    }
    if (ex.w_l.empty()) {
        ex.fallback_used = true;
        ex.w_l = tokens;
        ex.w_d = tokens;
    }
    return ex;
}

inline DecomposedExample decompose(std::string_view text, const SentimentLexicon& lex) {
    return decompose(tokenize(text), lex);
}

}  // namespace dcnet

#endif  // DCNET_DECOMPOSER_HPP
