#ifndef DCNET_LEXICON_HPP
#define DCNET_LEXICON_HPP

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dcnet/error.hpp"

namespace dcnet {

enum class Polarity { Positive, Negative };

constexpr Polarity opposite(Polarity p) {
    return p == Polarity::Positive ? Polarity::Negative : Polarity::Positive;
}

inline std::string_view to_string(Polarity p) {
    return p == Polarity::Positive ? "positive" : "negative";
}

inline std::optional<Polarity> parse_polarity(std::string_view s) {
    if (s == "positive") return Polarity::Positive;
    if (s == "negative") return Polarity::Negative;
    return std::nullopt;
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// What a loader saw besides the entries it kept.
struct LoadReport {
    std::size_t lines = 0;
    std::size_t well_formed = 0;
    std::size_t malformed = 0;
    std::vector<std::size_t> malformed_lines;  // 1-based
    std::size_t skipped_polarity = 0;          // neutral, both, ...
    std::size_t skipped_multiword = 0;
    std::vector<std::string> warnings;
};

// Lowercase word form -> prior polarity. Immutable once loaded.
class SentimentLexicon {
public:
    SentimentLexicon() = default;

    // Keeps the first polarity seen for a word. Returns false (and leaves the
    // lexicon unchanged) when the word is already present.
    bool insert(std::string_view word, Polarity p) {
        return entries_.emplace(to_lower(word), p).second;
    }

    std::optional<Polarity> polarity(std::string_view word) const {
        auto it = entries_.find(to_lower(word));
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(std::string_view word) const { return polarity(word).has_value(); }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const std::unordered_map<std::string, Polarity>& entries() const { return entries_; }

    const std::string& source_path() const { return source_path_; }
    void set_source_path(std::string p) { source_path_ = std::move(p); }

    // Entries sorted by word, for stable output.
    std::vector<std::pair<std::string, Polarity>> sorted_entries() const {
        std::vector<std::pair<std::string, Polarity>> v(entries_.begin(), entries_.end());
        std::sort(v.begin(), v.end());
        return v;
    }

private:
    std::unordered_map<std::string, Polarity> entries_;
    std::string source_path_;
};

inline std::optional<Polarity> polarity(const SentimentLexicon& lex, std::string_view word) {
    return lex.polarity(word);
}

namespace detail {

inline std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    return in;
}

inline void add_entry(SentimentLexicon& lex, LoadReport& report, const std::string& word,
                      Polarity p, std::size_t line_no) {
    auto existing = lex.polarity(word);
    if (existing) {
        if (*existing != p) {
            report.warnings.push_back("line " + std::to_string(line_no) + ": '" + word +
                                      "' already has polarity " +
                                      std::string(to_string(*existing)) + "; keeping first");
        }
        return;
    }
    lex.insert(word, p);
}

inline void mark_malformed(LoadReport& report, std::size_t line_no, std::string_view why) {
    ++report.malformed;
    report.malformed_lines.push_back(line_no);
    report.warnings.push_back("line " + std::to_string(line_no) + ": malformed (" +
                              std::string(why) + "), skipped");
}

}  // namespace detail

// MPQA subjectivity clues: one clue per line of space-separated key=value
// pairs, e.g.
//   type=weaksubj len=1 word1=abandoned pos1=adj stemmed1=n priorpolarity=negative
// Only single-word clues with positive/negative prior polarity are kept.
inline SentimentLexicon load_mpqa(const std::filesystem::path& path, LoadReport* report = nullptr) {
    auto in = detail::open_or_throw(path);
    LoadReport local;
    LoadReport& rep = report ? *report : local;
    rep = LoadReport{};

    SentimentLexicon lex;
    lex.set_source_path(path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        ++rep.lines;

        std::map<std::string, std::string> fields;
        std::istringstream ss(line);
        std::string kv;
        bool bad = false;
        while (ss >> kv) {
            auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) {
                bad = true;
                break;
            }
            fields[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        if (bad) {
            detail::mark_malformed(rep, line_no, "token without key=value");
            continue;
        }
        auto word = fields.find("word1");
        auto prior = fields.find("priorpolarity");
        if (word == fields.end() || word->second.empty() || prior == fields.end()) {
            detail::mark_malformed(rep, line_no, "missing word1 or priorpolarity");
            continue;
        }
        ++rep.well_formed;
        if (auto len = fields.find("len"); len != fields.end() && len->second != "1") {
            ++rep.skipped_multiword;
            continue;
        }
        auto p = parse_polarity(prior->second);
        if (!p) {
            ++rep.skipped_polarity;
            continue;
        }
        detail::add_entry(lex, rep, word->second, *p, line_no);
    }
    return lex;
}

// Fallback format: `word<TAB>positive|negative` per line.
inline SentimentLexicon load_tsv(const std::filesystem::path& path, LoadReport* report = nullptr) {
    auto in = detail::open_or_throw(path);
    LoadReport local;
    LoadReport& rep = report ? *report : local;
    rep = LoadReport{};

    SentimentLexicon lex;
    lex.set_source_path(path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        ++rep.lines;

        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || line.find('\t', tab + 1) != std::string::npos) {
            detail::mark_malformed(rep, line_no, "expected word<TAB>polarity");
            continue;
        }
        ++rep.well_formed;
        std::string word = line.substr(0, tab);
        std::string pol = line.substr(tab + 1);
        auto p = parse_polarity(to_lower(pol));
        if (!p) {
            ++rep.skipped_polarity;
            rep.warnings.push_back("line " + std::to_string(line_no) + ": unsupported polarity '" +
                                   pol + "', skipped");
            continue;
        }
        detail::add_entry(lex, rep, word, *p, line_no);
    }
    return lex;
}

// Picks the loader from the file extension: `.tsv` is the fallback format,
// anything else is read as MPQA clues.
inline SentimentLexicon load_lexicon(const std::filesystem::path& path, LoadReport* report = nullptr) {
    if (path.extension() == ".tsv") return load_tsv(path, report);
    return load_mpqa(path, report);
}

inline void write_tsv(const SentimentLexicon& lex, std::ostream& out) {
    for (const auto& [word, p] : lex.sorted_entries()) out << word << '\t' << to_string(p) << '\n';
}

}  // namespace dcnet

#endif  // DCNET_LEXICON_HPP
