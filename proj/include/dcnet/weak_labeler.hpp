#ifndef DCNET_WEAK_LABELER_HPP
#define DCNET_WEAK_LABELER_HPP

#include <cstddef>
#include <optional>

#include "dcnet/decomposer.hpp"
#include "dcnet/lexicon.hpp"

namespace dcnet {

struct PolarityCounts {
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    bool operator==(const PolarityCounts&) const = default;
};

// Approximate sentiment supervision for one example. y_l/y_d are present
// exactly when aux_mask is set.
struct WeakLabels {
    int y_s = 0;
    std::optional<Polarity> y_l;
    std::optional<Polarity> y_d;
    bool aux_mask = false;
    bool operator==(const WeakLabels&) const = default;
};

// Class index used by the sentiment heads.
constexpr int class_index(Polarity p) { return p == Polarity::Positive ? 1 : 0; }

// Counts lexicon hits over the full token sequence.
inline PolarityCounts count_polarities(const TokenSequence& tokens, const SentimentLexicon& lex) {
    PolarityCounts c;
    for (const auto& tok : tokens) {
        if (auto p = lex.polarity(tok)) {
            if (*p == Polarity::Positive)
                ++c.n_pos;
            else
                ++c.n_neg;
        }
    }
    return c;
}

// Majority polarity gives the literal label; sarcastic text flips it for the
// implied label. Ties (including no sentiment words) leave the auxiliary
// losses masked.
inline WeakLabels weak_labels(PolarityCounts counts, int y_s) {
    WeakLabels out;
    out.y_s = y_s;
    if (counts.n_pos == counts.n_neg) return out;
    Polarity literal = counts.n_pos > counts.n_neg ? Polarity::Positive : Polarity::Negative;
    out.aux_mask = true;
    out.y_l = literal;
    out.y_d = y_s == 1 ? opposite(literal) : literal;
    return out;
}

inline WeakLabels weak_labels(const DecomposedExample& ex, const SentimentLexicon& lex, int y_s) {
    return weak_labels(count_polarities(ex.w_t, lex), y_s);
}

}  // namespace dcnet

#endif  // DCNET_WEAK_LABELER_HPP
