#ifndef DCNET_CLI_HPP
#define DCNET_CLI_HPP

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcnet/checkpoint.hpp"
#include "dcnet/config.hpp"
#include "dcnet/data.hpp"
#include "dcnet/error.hpp"
#include "dcnet/pipeline.hpp"
#include "dcnet/verification.hpp"

namespace dcnet::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

inline constexpr const char* kConfigEnv = "DCNET_CONFIG";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string lexicon, corpus, test_corpus, format = "tsv", embeddings, config, out, checkpoint, analyzer, in;
    std::string precision;
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda1, lambda2, lambda3;
    std::optional<std::size_t> hidden_dim, input_dim, max_epochs;
    std::size_t n = 800;
    bool parallel = false;
};

namespace detail {

inline bool is_synthetic(const std::string& s) { return s == "synthetic"; }

inline std::uint64_t seed_or(const Options& o, std::uint64_t fallback) { return o.seed.value_or(fallback); }

// Config file (flag, then environment), then flag overrides. The synthetic
// corpus starts from its own preset.
inline TrainConfig resolve_config(const Options& o) {
    TrainConfig cfg = is_synthetic(o.corpus) ? synthetic_config() : TrainConfig{};
    std::string path = o.config;
    if (path.empty())
        if (const char* env = std::getenv(kConfigEnv)) path = env;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open config: " + path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("bad config " + path + ": " + e.what());
        }
        cfg = train_config_from_json(j, cfg);
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.lambda1) cfg.lambda.lambda1 = *o.lambda1;
    if (o.lambda2) cfg.lambda.lambda2 = *o.lambda2;
    if (o.lambda3) cfg.lambda.lambda3 = *o.lambda3;
    if (!o.analyzer.empty()) cfg.model.analyzer = parse_analyzer(o.analyzer);
    if (o.hidden_dim) cfg.model.encoder.hidden_dim = *o.hidden_dim;
    if (o.input_dim) cfg.model.encoder.input_dim = *o.input_dim;
    if (o.max_epochs) cfg.max_epochs = *o.max_epochs;
    if (!o.precision.empty()) cfg.precision = parse_precision(o.precision);
    cfg.validate();
    return cfg;
}

inline SentimentLexicon resolve_lexicon(const Options& o, std::ostream& err) {
    if (o.lexicon.empty() || is_synthetic(o.lexicon)) {
        if (o.lexicon.empty() && !is_synthetic(o.corpus))
            throw UsageError("--lexicon is required unless --corpus synthetic");
        return synthetic_lexicon();
    }
    LoadReport report;
    auto lex = load_lexicon(o.lexicon, &report);
    for (const auto& w : report.warnings) err << "lexicon: " << w << '\n';
    if (report.malformed > 0) err << "lexicon: " << report.malformed << " malformed line(s) skipped\n";
    if (lex.size() == 0) throw DataError("lexicon " + o.lexicon + " has no usable entries");
    return lex;
}

inline Corpus resolve_corpus(const Options& o, std::uint64_t seed) {
    if (o.corpus.empty()) throw UsageError("--corpus is required");
    if (is_synthetic(o.corpus)) return gen_synthetic(o.n, seed).corpus;
    return load_corpus(o.corpus, parse_corpus_format(o.format), std::filesystem::path(o.corpus).stem().string());
}

inline PipelineInputs resolve_inputs(const Options& o, const TrainConfig& cfg, std::ostream& err) {
    PipelineInputs in;
    in.corpus = resolve_corpus(o, cfg.seed);
    if (!o.test_corpus.empty())
        in.test_corpus = load_corpus(o.test_corpus, parse_corpus_format(o.format), "test");
    in.lexicon = resolve_lexicon(o, err);
    if (!o.embeddings.empty()) in.embeddings = o.embeddings;
    return in;
}

// Writes to --out when given, otherwise to `fallback`.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) throw DataError("cannot write " + path);
            os_ = &file_;
        }
    }
    std::ostream& operator*() { return *os_; }

private:
    std::ofstream file_;
    std::ostream* os_;
};

inline nlohmann::json polarity_json(const std::optional<Polarity>& p) {
    return p ? nlohmann::json(std::string(to_string(*p))) : nlohmann::json(nullptr);
}

}  // namespace detail

inline int cmd_decompose(const Options& o, std::ostream& out, std::ostream& err) {
    auto corpus = detail::resolve_corpus(o, detail::seed_or(o, 13));
    auto lex = detail::resolve_lexicon(o, err);
    detail::Sink sink(o.out, out);
    std::size_t fallback = 0;
    for (const auto& ex : corpus.examples) {
        auto d = decompose(ex.text, lex);
        fallback += d.fallback_used;
        nlohmann::json j{{"id", ex.id}, {"y_s", ex.y_s},      {"text", ex.text},
                         {"tokens", d.w_t}, {"w_l", d.w_l}, {"w_d", d.w_d},
                         {"fallback_used", d.fallback_used}};
        *sink << j.dump() << '\n';
    }
    err << "decomposed " << corpus.examples.size() << " examples, " << fallback << " without lexicon hits\n";
    return kOk;
}

inline int cmd_label(const Options& o, std::ostream& out, std::ostream& err) {
    auto lex = detail::resolve_lexicon(o, err);
    std::ifstream in(o.in);
    if (!in) throw DataError("cannot open " + o.in);
    detail::Sink sink(o.out, out);
    std::string line;
    std::size_t line_no = 0, masked = 0, n = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        WeakLabels wl;
        std::string id;
        try {
            auto j = nlohmann::json::parse(line);
            id = j.at("id").get<std::string>();
            const int y_s = j.at("y_s").get<int>();
            if (y_s != 0 && y_s != 1) throw DataError("y_s must be 0 or 1");
            auto tokens = j.at("tokens").get<TokenSequence>();
            wl = weak_labels(count_polarities(tokens, lex), y_s);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(o.in + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(o.in + ":" + std::to_string(line_no) + ": " + e.what());
        }
        masked += !wl.aux_mask;
        ++n;
        nlohmann::json j{{"id", id},
                         {"y_s", wl.y_s},
                         {"y_l", detail::polarity_json(wl.y_l)},
                         {"y_d", detail::polarity_json(wl.y_d)},
                         {"aux_mask", wl.aux_mask}};
        *sink << j.dump() << '\n';
    }
    err << "labelled " << n << " examples, " << masked << " with auxiliary losses masked\n";
    return kOk;
}

inline int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
    auto cfg = detail::resolve_config(o);
    auto in = detail::resolve_inputs(o, cfg, err);
    auto res = run_pipeline(cfg, in, &err);
    write_artifacts(cfg, res, o.out);
    out << "best checkpoint " << res.history.best_checkpoint << " of " << res.history.records.size() << " ("
        << res.history.stop_reason << "); test macro-F1 " << std::fixed << std::setprecision(4)
        << res.test_metrics.macro_f1 << ", accuracy " << res.test_metrics.accuracy << '\n';
    out.unsetf(std::ios::fixed);
    return kOk;
}

// Scores a checkpoint on every example of the corpus.
inline int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
    auto ck = load_checkpoint(o.checkpoint);
    auto model = model_from_checkpoint<float>(ck);
    auto corpus = detail::resolve_corpus(o, detail::seed_or(o, ck.config.value("seed", std::uint64_t{13})));
    auto lex = detail::resolve_lexicon(o, err);
    auto examples = encode(prepare(corpus.examples, lex), ck.vocab);
    auto m = evaluate(model, examples, ck.vocab.fingerprint());
    detail::Sink sink(o.out, out);
    *sink << to_json(m).dump(2) << '\n';
    return kOk;
}

inline int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err) {
    auto cfg = detail::resolve_config(o);
    auto in = detail::resolve_inputs(o, cfg, err);
    auto rows = run_ablation(cfg, in, o.parallel, &err);
    print_ablation_table(rows, out);
    if (!o.out.empty()) {
        std::filesystem::create_directories(o.out);
        write_json(to_json(rows), std::filesystem::path(o.out) / "ablation.json");
    }
    return kOk;
}

inline int cmd_gradcheck(const Options& o, std::ostream& out, std::ostream&) {
    const auto seed = detail::seed_or(o, 7);
    bool ok = true;
    double worst = 0;
    for (const auto& c : verify::run_all(seed)) {
        ok = ok && c.passed();
        worst = std::max(worst, c.result.max_rel_error);
        out << std::left << std::setw(26) << c.name << std::right << std::scientific << std::setprecision(3)
            << std::setw(11) << c.result.max_rel_error << "  tol " << c.tolerance << "  "
            << (c.passed() ? "ok" : "FAIL") << "  (" << c.result.coords_checked << " coords, worst "
            << c.result.worst_param << "[" << c.result.worst_index << "])\n";
    }
    out << "max relative error " << worst << '\n';
    out.unsetf(std::ios::scientific);
    return ok ? kOk : kNumeric;
}

inline int cmd_export_reps(const Options& o, std::ostream&, std::ostream& err) {
    auto ck = load_checkpoint(o.checkpoint);
    auto model = model_from_checkpoint<float>(ck);
    auto corpus = detail::resolve_corpus(o, detail::seed_or(o, ck.config.value("seed", std::uint64_t{13})));
    auto lex = detail::resolve_lexicon(o, err);
    auto examples = encode(prepare(corpus.examples, lex), ck.vocab);
    std::vector<std::string> ids;
    std::vector<int> ys;
    std::vector<ExampleView> views;
    for (const auto& ex : examples) {
        ids.push_back(ex.id);
        ys.push_back(ex.labels.y_s);
        views.push_back(ex.view());
    }
    export_representations(model, std::span<const std::string>(ids), std::span<const int>(ys),
                           std::span<const ExampleView>(views), o.out);
    err << "wrote " << 2 * views.size() << " rows to " << o.out << '\n';
    return kOk;
}

inline int cmd_gen_synthetic(const Options& o, std::ostream&, std::ostream& err) {
    auto data = gen_synthetic(o.n, detail::seed_or(o, 13));
    std::filesystem::path dir(o.out);
    std::filesystem::create_directories(dir);
    {
        std::ofstream c(dir / "corpus.tsv", std::ios::binary);
        write_corpus_tsv(data.corpus, c);
    }
    {
        std::ofstream l(dir / "lexicon.tsv", std::ios::binary);
        write_tsv(data.lexicon, l);
    }
    err << "wrote " << data.corpus.examples.size() << " examples to " << (dir / "corpus.tsv").string() << '\n';
    return kOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    Options o;
    CLI::App app{"DC-Net sarcasm detection", "dcnet"};
    app.require_subcommand(1, 1);
    app.failure_message(CLI::FailureMessage::help);

    auto corpus_opts = [&](CLI::App* s, bool required) {
        auto* c = s->add_option("--corpus", o.corpus, "corpus file, or 'synthetic'");
        if (required) c->required();
        s->add_option("--format", o.format, "tsv | semeval")->check(CLI::IsMember({"tsv", "semeval"}));
        s->add_option("--lexicon", o.lexicon, "MPQA clues or word<TAB>polarity TSV, or 'synthetic'");
        s->add_option("--n", o.n, "synthetic corpus size")->check(CLI::Range(std::size_t{4}, std::size_t{10000000}));
        s->add_option("--seed", o.seed, "random seed");
    };
    auto train_opts = [&](CLI::App* s) {
        corpus_opts(s, true);
        s->add_option("--test-corpus", o.test_corpus, "separate test file (same format)");
        s->add_option("--embeddings", o.embeddings, "pretrained vectors, text format");
        s->add_option("--config", o.config, std::string("JSON config (default: $") + kConfigEnv + ")");
        s->add_option("--analyzer", o.analyzer, "concat | subtract")
            ->check(CLI::IsMember({"concat", "subtract"}));
        s->add_option("--lambda1", o.lambda1);
        s->add_option("--lambda2", o.lambda2);
        s->add_option("--lambda3", o.lambda3);
        s->add_option("--hidden-dim", o.hidden_dim);
        s->add_option("--input-dim", o.input_dim);
        s->add_option("--max-epochs", o.max_epochs);
        s->add_option("--precision", o.precision)->check(CLI::IsMember({"float32", "float64"}));
    };

    auto* decompose = app.add_subcommand("decompose", "split texts into literal and implied parts (JSON lines)");
    corpus_opts(decompose, true);
    decompose->add_option("--out", o.out, "output file (default stdout)");

    auto* label = app.add_subcommand("label", "weak sentiment labels for decomposed JSON lines");
    label->add_option("--in", o.in, "output of decompose")->required();
    label->add_option("--lexicon", o.lexicon)->required();
    label->add_option("--out", o.out, "output file (default stdout)");

    auto* train = app.add_subcommand("train", "train and evaluate on a held-out split");
    train_opts(train);
    train->add_option("--out", o.out, "artifact directory")->required();

    auto* eval = app.add_subcommand("eval", "score a checkpoint on a corpus");
    corpus_opts(eval, true);
    eval->add_option("--checkpoint", o.checkpoint)->required();
    eval->add_option("--out", o.out, "metrics JSON (default stdout)");

    auto* ablate = app.add_subcommand("ablate", "train the four objective settings");
    train_opts(ablate);
    ablate->add_flag("--parallel", o.parallel, "run the four trainings concurrently");
    ablate->add_option("--out", o.out, "directory for ablation.json");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");
    gradcheck->add_option("--seed", o.seed);

    auto* export_reps = app.add_subcommand("export-reps", "write literal/implied representations as TSV");
    corpus_opts(export_reps, true);
    export_reps->add_option("--checkpoint", o.checkpoint)->required();
    export_reps->add_option("--out", o.out, "output TSV")->required();

    auto* gen = app.add_subcommand("gen-synthetic", "write the synthetic corpus and lexicon");
    gen->add_option("--n", o.n)->check(CLI::Range(std::size_t{4}, std::size_t{10000000}));
    gen->add_option("--seed", o.seed);
    gen->add_option("--out", o.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*decompose) return cmd_decompose(o, out, err);
        if (*label) return cmd_label(o, out, err);
        if (*train) return cmd_train(o, out, err);
        if (*eval) return cmd_eval(o, out, err);
        if (*ablate) return cmd_ablate(o, out, err);
        if (*gradcheck) return cmd_gradcheck(o, out, err);
        if (*export_reps) return cmd_export_reps(o, out, err);
        if (*gen) return cmd_gen_synthetic(o, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kUsage;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kNumeric;
    } catch (const ShapeError& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}

}  // namespace dcnet::cli

#endif  // DCNET_CLI_HPP
