#ifndef DCNET_DATA_HPP
#define DCNET_DATA_HPP

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dcnet/decomposer.hpp"
#include "dcnet/error.hpp"
#include "dcnet/lexicon.hpp"
#include "dcnet/model.hpp"
#include "dcnet/random.hpp"
#include "dcnet/tensor.hpp"
#include "dcnet/weak_labeler.hpp"

namespace dcnet {

// ---------------------------------------------------------------------------
// Corpus

struct CorpusExample {
    std::string id;
    std::string text;
    int y_s = 0;
};

struct Corpus {
    std::string name = "custom";  // iac-v1 | iac-v2 | tweets | synthetic | custom
    std::vector<CorpusExample> examples;

    std::size_t count_label(int y) const {
        return static_cast<std::size_t>(
            std::count_if(examples.begin(), examples.end(), [y](const auto& e) { return e.y_s == y; }));
    }
};

enum class CorpusFormat { Tsv, Semeval };

inline CorpusFormat parse_corpus_format(std::string_view s) {
    if (s == "tsv") return CorpusFormat::Tsv;
    if (s == "semeval") return CorpusFormat::Semeval;
    throw std::invalid_argument("unknown corpus format '" + std::string(s) + "'");
}

namespace detail {

inline int parse_label(std::string_view s, const std::filesystem::path& path, std::size_t line_no) {
    while (!s.empty() && (s.front() == ' ')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ')) s.remove_suffix(1);
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": label must be 0 or 1, got '" +
                    std::string(s) + "'");
}

}  // namespace detail

// TSV rows are `label<TAB>text` and take their 1-based line number as id.
// SemEval-2018 Task 3 files are `Tweet index<TAB>Label<TAB>Tweet text` with
// a header row; the tweet index is the id. Malformed rows abort the load.
inline Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, std::string name = "custom") {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus: " + path.string());
    Corpus corpus;
    corpus.name = std::move(name);
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto where = path.string() + ":" + std::to_string(line_no);

        CorpusExample ex;
        if (format == CorpusFormat::Tsv) {
            auto tab = line.find('\t');
            if (tab == std::string::npos) throw DataError(where + ": expected label<TAB>text");
            ex.id = std::to_string(line_no);
            ex.y_s = detail::parse_label(std::string_view(line).substr(0, tab), path, line_no);
            ex.text = line.substr(tab + 1);
        } else {
            if (line_no == 1 && to_lower(line).rfind("tweet index", 0) == 0) continue;
            auto t1 = line.find('\t');
            auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
            if (t2 == std::string::npos) throw DataError(where + ": expected index<TAB>label<TAB>text");
            ex.id = line.substr(0, t1);
            ex.y_s = detail::parse_label(std::string_view(line).substr(t1 + 1, t2 - t1 - 1), path, line_no);
            ex.text = line.substr(t2 + 1);
        }
        if (!seen.insert(ex.id).second) throw DataError(where + ": duplicate id '" + ex.id + "'");
        corpus.examples.push_back(std::move(ex));
    }
    if (corpus.examples.empty()) throw DataError("no examples in " + path.string());
    return corpus;
}

inline void write_corpus_tsv(const Corpus& c, std::ostream& out) {
    for (const auto& e : c.examples) out << e.y_s << '\t' << e.text << '\n';
}

// ---------------------------------------------------------------------------
// Splits

// Stratified by label. The held-out size is round(frac * n); it is shared
// between classes by largest remainder (ties to class 0). Order within each
// returned part follows the input order.
inline std::pair<std::vector<CorpusExample>, std::vector<CorpusExample>> split_train_valid(
    const std::vector<CorpusExample>& examples, double valid_frac, std::uint64_t seed) {
    if (!(valid_frac > 0.0 && valid_frac < 1.0))
        throw std::invalid_argument("valid fraction must be in (0, 1)");
    const std::size_t n = examples.size();
    const auto k = static_cast<std::size_t>(std::llround(valid_frac * static_cast<double>(n)));
    if (k == 0 || k >= n)
        throw DataError("corpus of " + std::to_string(n) + " examples is too small for a " +
                        std::to_string(valid_frac) + " split");

    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[examples[i].y_s == 1 ? 1 : 0].push_back(i);

    std::array<std::size_t, 2> take{};
    std::array<double, 2> rem{};
    for (int c = 0; c < 2; ++c) {
        double exact = static_cast<double>(k) * static_cast<double>(by_class[c].size()) / static_cast<double>(n);
        take[c] = static_cast<std::size_t>(std::floor(exact));
        rem[c] = exact - static_cast<double>(take[c]);
    }
    std::size_t left = k - take[0] - take[1];
    for (int c : rem[1] > rem[0] ? std::array<int, 2>{1, 0} : std::array<int, 2>{0, 1}) {
        if (left > 0 && take[c] < by_class[c].size()) {
            ++take[c];
            --left;
        }
    }

    Rng rng = Rng::derive(seed, 0x73706c6974ULL);
    std::vector<bool> held(n, false);
    for (int c = 0; c < 2; ++c) {
        auto& idx = by_class[c];
        rng.shuffle(std::span<std::size_t>(idx));
        for (std::size_t j = 0; j < take[c]; ++j) held[idx[j]] = true;
    }
    std::pair<std::vector<CorpusExample>, std::vector<CorpusExample>> out;
    for (std::size_t i = 0; i < n; ++i) (held[i] ? out.second : out.first).push_back(examples[i]);
    return out;
}

struct SplitManifest {
    std::uint64_t seed = 0;
    std::vector<std::string> train, valid, test;
};

inline void to_json(nlohmann::json& j, const SplitManifest& m) {
    j = nlohmann::json{{"seed", m.seed}, {"train", m.train}, {"valid", m.valid}, {"test", m.test}};
}

inline void from_json(const nlohmann::json& j, SplitManifest& m) {
    j.at("seed").get_to(m.seed);
    j.at("train").get_to(m.train);
    j.at("valid").get_to(m.valid);
    j.at("test").get_to(m.test);
}

inline std::vector<std::string> ids_of(const std::vector<CorpusExample>& v) {
    std::vector<std::string> out;
    for (const auto& e : v) out.push_back(e.id);
    return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

inline std::uint32_t crc32_of(std::string_view bytes, std::uint32_t crc = 0) {
    return static_cast<std::uint32_t>(
        ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

class Vocabulary {
public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnk = 1;

    Vocabulary() : tokens_{"<pad>", "<unk>"} {}

    // Rebuilds from a token list whose first two entries are PAD and UNK.
    explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
        if (tokens_.size() < 2) throw DataError("vocabulary must contain PAD and UNK");
        for (std::size_t i = 2; i < tokens_.size(); ++i)
            if (!index_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second)
                throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
    }

    std::int32_t add(const std::string& tok) {
        auto [it, inserted] = index_.emplace(tok, static_cast<std::int32_t>(tokens_.size()));
        if (inserted) tokens_.push_back(tok);
        return it->second;
    }

    std::int32_t index(const std::string& tok) const {
        auto it = index_.find(tok);
        return it == index_.end() ? kUnk : it->second;
    }
    const std::string& token(std::int32_t i) const { return tokens_.at(static_cast<std::size_t>(i)); }
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    std::uint32_t fingerprint() const {
        std::uint32_t crc = 0;
        for (const auto& t : tokens_) {
            crc = crc32_of(t, crc);
            crc = crc32_of(std::string_view("\n", 1), crc);
        }
        return crc;
    }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::int32_t> index_;
};

// ---------------------------------------------------------------------------
// Decomposed, labeled, and indexed examples

struct PreparedExample {
    std::string id;
    std::string text;
    DecomposedExample parts;
    WeakLabels labels;
};

inline PreparedExample prepare(const CorpusExample& ex, const SentimentLexicon& lex) {
    PreparedExample p;
    p.id = ex.id;
    p.text = ex.text;
    p.parts = decompose(tokenize(ex.text), lex);
    p.labels = weak_labels(count_polarities(p.parts.w_t, lex), ex.y_s);
    return p;
}

inline std::vector<PreparedExample> prepare(const std::vector<CorpusExample>& exs, const SentimentLexicon& lex) {
    std::vector<PreparedExample> out;
    out.reserve(exs.size());
    for (const auto& e : exs) out.push_back(prepare(e, lex));
    return out;
}

// Vocabulary over the full-text tokens of the given (training) examples, in
// order of first occurrence.
inline Vocabulary build_vocabulary(const std::vector<PreparedExample>& train) {
    Vocabulary v;
    for (const auto& ex : train)
        for (const auto& tok : ex.parts.w_t) v.add(tok);
    return v;
}

struct EncodedExample {
    std::string id;
    std::vector<std::int32_t> w_t, w_l, w_d;
    WeakLabels labels;
    bool fallback_used = false;
    std::uint32_t vocab_fingerprint = 0;

    ExampleView view() const { return {w_t, w_l, w_d}; }
};

inline EncodedExample encode(const PreparedExample& p, const Vocabulary& vocab) {
    auto ids = [&](const TokenSequence& toks) {
        std::vector<std::int32_t> out;
        out.reserve(toks.size());
        for (const auto& t : toks) out.push_back(vocab.index(t));
        return out;
    };
    return {p.id, ids(p.parts.w_t), ids(p.parts.w_l), ids(p.parts.w_d), p.labels, p.parts.fallback_used,
            vocab.fingerprint()};
}

inline std::vector<EncodedExample> encode(const std::vector<PreparedExample>& ps, const Vocabulary& vocab) {
    std::vector<EncodedExample> out;
    out.reserve(ps.size());
    for (const auto& p : ps) out.push_back(encode(p, vocab));
    return out;
}

// ---------------------------------------------------------------------------
// Embeddings

struct EmbeddingMatrix {
    Tensor<float> matrix;
    std::size_t matched = 0;
    double coverage = 0;  // matched / (|V| - 2); PAD and UNK are never matched
};

// Every row uniform(-0.05, 0.05) under the seed, PAD row zero.
inline EmbeddingMatrix random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed) {
    EmbeddingMatrix e;
    e.matrix = Tensor<float>({vocab.size(), dim});
    Rng rng = Rng::derive(seed, 0x656d626564ULL);
    for (auto& v : e.matrix.values()) v = static_cast<float>(rng.uniform(-0.05, 0.05));
    for (auto& v : e.matrix.row(0)) v = 0.0f;
    return e;
}

// Text vectors, one `word v1 ... v_dim` per line; an optional word2vec-style
// `count dim` header is skipped. Rows for vocabulary words found in the file
// are copied; the rest keep their random initialization.
inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                                       std::size_t dim, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embeddings: " + path.string());
    EmbeddingMatrix e = random_embeddings(vocab, dim, seed);
    std::vector<bool> filled(vocab.size(), false);
    std::string line;
    std::size_t line_no = 0;
    std::vector<float> vals;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto sp = line.find(' ');
        if (sp == std::string::npos) continue;
        std::string word = line.substr(0, sp);
        vals.clear();
        const char* p = line.data() + sp;
        const char* end = line.data() + line.size();
        bool bad = false;
        while (p < end) {
            while (p < end && *p == ' ') ++p;
            if (p == end) break;
            float f = 0;
            auto [q, ec] = std::from_chars(p, end, f);
            if (ec != std::errc() || !std::isfinite(f)) {
                bad = true;
                break;
            }
            vals.push_back(f);
            p = q;
        }
        if (line_no == 1 && !bad && vals.size() == 1) continue;  // header
        if (bad) throw DataError(path.string() + ":" + std::to_string(line_no) + ": unparsable or non-finite vector");
        if (vals.size() != dim)
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": vector has " +
                            std::to_string(vals.size()) + " components, expected " + std::to_string(dim));
        auto idx = vocab.index(word);
        if (idx <= Vocabulary::kUnk || filled[static_cast<std::size_t>(idx)]) continue;
        filled[static_cast<std::size_t>(idx)] = true;
        ++e.matched;
        std::copy(vals.begin(), vals.end(), e.matrix.row(static_cast<std::size_t>(idx)).begin());
    }
    e.coverage = vocab.size() > 2 ? static_cast<double>(e.matched) / static_cast<double>(vocab.size() - 2) : 0.0;
    return e;
}

// ---------------------------------------------------------------------------
// Batching

// Each channel is padded to its own maximum length within the batch; the
// true lengths travel alongside so padding never reaches an encoder.
struct Batch {
    std::vector<std::size_t> indices;  // into the example list
    std::size_t max_t = 0, max_l = 0, max_d = 0;
    std::vector<std::int32_t> t_ids, l_ids, d_ids;  // row-major [size x max_*]
    std::vector<std::size_t> t_len, l_len, d_len;
    std::vector<WeakLabels> labels;

    std::size_t size() const { return indices.size(); }

    ExampleView view(std::size_t row) const {
        auto slice = [row](const std::vector<std::int32_t>& ids, std::size_t width, std::size_t len) {
            return std::span<const std::int32_t>(ids).subspan(row * width, len);
        };
        return {slice(t_ids, max_t, t_len[row]), slice(l_ids, max_l, l_len[row]), slice(d_ids, max_d, d_len[row])};
    }
};

inline Batch make_batch(const std::vector<EncodedExample>& examples, std::span<const std::size_t> idx) {
    Batch b;
    b.indices.assign(idx.begin(), idx.end());
    for (auto i : idx) {
        b.max_t = std::max(b.max_t, examples[i].w_t.size());
        b.max_l = std::max(b.max_l, examples[i].w_l.size());
        b.max_d = std::max(b.max_d, examples[i].w_d.size());
    }
    auto pad = [](std::vector<std::int32_t>& dst, const std::vector<std::int32_t>& src, std::size_t width) {
        dst.insert(dst.end(), src.begin(), src.end());
        dst.insert(dst.end(), width - src.size(), Vocabulary::kPad);
    };
    for (auto i : idx) {
        const auto& ex = examples[i];
        pad(b.t_ids, ex.w_t, b.max_t);
        pad(b.l_ids, ex.w_l, b.max_l);
        pad(b.d_ids, ex.w_d, b.max_d);
        b.t_len.push_back(ex.w_t.size());
        b.l_len.push_back(ex.w_l.size());
        b.d_len.push_back(ex.w_d.size());
        b.labels.push_back(ex.labels);
    }
    return b;
}

// One epoch of batches in an order drawn from `rng`; the last batch may be
// partial.
inline std::vector<Batch> make_batches(const std::vector<EncodedExample>& examples, std::size_t batch_size,
                                       Rng& rng) {
    if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<Batch> out;
    for (std::size_t s = 0; s < order.size(); s += batch_size) {
        auto n = std::min(batch_size, order.size() - s);
        out.push_back(make_batch(examples, std::span<const std::size_t>(order).subspan(s, n)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SyntheticData {
    Corpus corpus;
    SentimentLexicon lexicon;
};

namespace detail {

inline const std::array<const char*, 20> kSynPositiveWords = {
    "great", "wonderful", "amazing", "fantastic", "love", "lovely", "awesome", "perfect", "excellent", "brilliant",
    "delightful", "superb", "fabulous", "terrific", "marvelous", "glorious", "splendid", "thrilled", "happy", "best"};
inline const std::array<const char*, 20> kSynNegativeWords = {
    "awful", "terrible", "horrible", "hate", "miserable", "dreadful", "worst", "annoying", "disgusting", "pathetic",
    "lousy", "sad", "upset", "angry", "boring", "nasty", "tragic", "gloomy", "painful", "ugly"};

inline const std::array<const char*, 16> kSynPositiveSituations = {
    "we won the championship game", "my sister got engaged", "i got a raise today",
    "the sun is out at the beach", "my friends threw me a surprise party", "i passed my driving test",
    "we adopted a puppy", "grandma baked cookies for us", "the concert tickets finally arrived",
    "i finished my thesis", "my team shipped the release on time", "we are going on vacation tomorrow",
    "the baby slept through the night", "i found twenty dollars in my coat", "our garden is full of flowers",
    "my favorite band is touring again"};
inline const std::array<const char*, 16> kSynNegativeSituations = {
    "final exam is on my birthday", "my flight got delayed for six hours",
    "the printer jammed right before the deadline", "i have to work all weekend", "my phone died in the rain",
    "the bus left without me", "i got a parking ticket this morning", "my laptop crashed during the presentation",
    "the wifi has been down all day", "i missed the train by one minute", "coffee spilled all over my shirt",
    "the power went out during dinner", "my car broke down on the highway", "i lost my wallet at the mall",
    "the dentist found three cavities", "it rained on our picnic"};

// {w} is the sentiment phrase, {s} the situation.
inline const std::array<const char*, 7> kSynTemplates = {
    "{s} . {w} !", "oh {w} , {s}", "{w} ... {s}", "so {w} that {s}", "{s} , how {w}", "just {w} : {s}",
    "{w} day when {s}"};

inline std::string fill_template(std::string tpl, const std::string& w, const std::string& s) {
    auto put = [&](const std::string& key, const std::string& val) {
        auto pos = tpl.find(key);
        if (pos != std::string::npos) tpl.replace(pos, key.size(), val);
    };
    put("{w}", w);
    put("{s}", s);
    return tpl;
}

}  // namespace detail

inline SentimentLexicon synthetic_lexicon() {
    SentimentLexicon lex;
    for (const char* w : detail::kSynPositiveWords) lex.insert(w, Polarity::Positive);
    for (const char* w : detail::kSynNegativeWords) lex.insert(w, Polarity::Negative);
    lex.set_source_path("<synthetic>");
    return lex;
}

// Templated sentences pairing a sentiment phrase with a situation of known
// polarity; sarcastic exactly when the two polarities differ. floor(n/2)
// examples are sarcastic.
inline SyntheticData gen_synthetic(std::size_t n, std::uint64_t seed) {
    if (n < 4) throw std::invalid_argument("synthetic corpus needs n >= 4");
    using namespace detail;
    SyntheticData out;
    out.lexicon = synthetic_lexicon();
    out.corpus.name = "synthetic";

    Rng rng = Rng::derive(seed, 0x73796e7468ULL);
    std::vector<int> labels(n, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n / 2), 1);
    rng.shuffle(std::span<int>(labels));

    auto pick = [&](const auto& arr) { return std::string(arr[rng.index(arr.size())]); };
    for (std::size_t i = 0; i < n; ++i) {
        const bool literal_pos = rng.bernoulli(0.5);
        const bool situation_pos = labels[i] == 1 ? !literal_pos : literal_pos;
        std::string phrase = literal_pos ? pick(kSynPositiveWords) : pick(kSynNegativeWords);
        if (rng.bernoulli(0.25)) {
            std::string second = literal_pos ? pick(kSynPositiveWords) : pick(kSynNegativeWords);
            if (second != phrase) phrase += " and " + second;
        }
        std::string situation = situation_pos ? pick(kSynPositiveSituations) : pick(kSynNegativeSituations);
        std::string text = fill_template(pick(kSynTemplates), phrase, situation);

        std::array<char, 32> id{};
        std::snprintf(id.data(), id.size(), "syn-%05zu", i);
        out.corpus.examples.push_back({id.data(), std::move(text), labels[i]});
    }
    return out;
}

}  // namespace dcnet

#endif  // DCNET_DATA_HPP
