#ifndef DCNET_PIPELINE_HPP
#define DCNET_PIPELINE_HPP

#include <array>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcnet/checkpoint.hpp"
#include "dcnet/config.hpp"
#include "dcnet/data.hpp"
#include "dcnet/metrics.hpp"
#include "dcnet/trainer.hpp"

namespace dcnet {

struct PipelineInputs {
    Corpus corpus;
    std::optional<Corpus> test_corpus;  // official test split, when there is one
    SentimentLexicon lexicon;
    std::optional<std::filesystem::path> embeddings;
};

struct PreparedSplits {
    SplitManifest manifest;
    Vocabulary vocab;
    std::vector<EncodedExample> train, valid, test;
    EmbeddingMatrix embeddings;
};

// Splits, decomposes, labels, indexes, and loads embeddings. Without a test
// corpus, test_frac of the corpus is held out first (stratified); valid_frac
// of the remainder becomes the validation set. The vocabulary comes from the
// training part only.
inline PreparedSplits prepare_splits(const TrainConfig& cfg, const PipelineInputs& in) {
    PreparedSplits out;
    std::vector<CorpusExample> train_all, test;
    if (in.test_corpus) {
        train_all = in.corpus.examples;
        test = in.test_corpus->examples;
    } else {
        std::tie(train_all, test) = split_train_valid(in.corpus.examples, cfg.test_frac, cfg.seed ^ 0x74657374ULL);
    }
    auto [train, valid] = split_train_valid(train_all, cfg.valid_frac, cfg.seed);
    out.manifest = {cfg.seed, ids_of(train), ids_of(valid), ids_of(test)};

    auto p_train = prepare(train, in.lexicon);
    out.vocab = build_vocabulary(p_train);
    out.train = encode(p_train, out.vocab);
    out.valid = encode(prepare(valid, in.lexicon), out.vocab);
    out.test = encode(prepare(test, in.lexicon), out.vocab);
    out.embeddings = in.embeddings ? load_embeddings(*in.embeddings, out.vocab, cfg.model.encoder.input_dim, cfg.seed)
                                   : random_embeddings(out.vocab, cfg.model.encoder.input_dim, cfg.seed);
    return out;
}

struct PipelineResult {
    PreparedSplits data;
    TrainHistory history;
    Metrics test_metrics;
    DCNet<float> best_model;  // float32 copy of the selected parameters
};

template <class T>
DCNet<float> to_float_model(const DCNet<T>& m) {
    if constexpr (std::is_same_v<T, float>) {
        return m;
    } else {
        DCNet<float> f(m.config(), m.vocab_size(), 0);
        for (std::size_t i = 0; i < f.params().size(); ++i) {
            auto src = m.params()[i].tensor.values();
            auto dst = f.params()[i].tensor.values();
            for (std::size_t k = 0; k < src.size(); ++k) dst[k] = static_cast<float>(src[k]);
        }
        return f;
    }
}

// Trains on prepared splits and scores the best-validation checkpoint on the
// test set (never the last step).
inline PipelineResult run_training(const TrainConfig& cfg, PreparedSplits data, std::ostream* log = nullptr) {
    PipelineResult res;
    auto run = [&](auto tag) {
        using T = decltype(tag);
        auto tr = train<T>(cfg, data.train, data.valid, data.vocab, data.embeddings, log);
        res.history = std::move(tr.history);
        res.test_metrics = evaluate(tr.best_model, data.test, data.vocab.fingerprint());
        res.best_model = to_float_model(tr.best_model);
    };
    if (cfg.precision == Precision::Float64)
        run(double{});
    else
        run(float{});
    res.data = std::move(data);
    return res;
}

inline PipelineResult run_pipeline(const TrainConfig& cfg, const PipelineInputs& in, std::ostream* log = nullptr) {
    return run_training(cfg, prepare_splits(cfg, in), log);
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

// Writes model.ckpt, history.jsonl, metrics.json and split.json into `dir`.
inline void write_artifacts(const TrainConfig& cfg, const PipelineResult& res, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_checkpoint(res.best_model, res.data.vocab, to_json(cfg), dir / "model.ckpt");
    {
        std::ofstream h(dir / "history.jsonl", std::ios::binary);
        write_history_jsonl(res.history, h);
    }
    auto m = to_json(res.test_metrics);
    m["best_checkpoint"] = res.history.best_checkpoint;
    m["embedding_coverage"] = res.data.embeddings.coverage;
    write_json(m, dir / "metrics.json");
    write_json(nlohmann::json(res.data.manifest), dir / "split.json");
}

// ---------------------------------------------------------------------------
// Objective ablation

struct AblationRow {
    std::string objective;
    LossWeights lambda;
    Metrics metrics;
    std::size_t best_checkpoint = 0;
};

// The four objective settings: J_s, J_s+J_d, J_s+J_l, J_s+J_l+J_d. Masked
// terms get a zero weight; the architecture is unchanged.
inline std::array<std::pair<std::string, LossWeights>, 4> ablation_settings(const LossWeights& base) {
    return {{{"J_s", {base.lambda1, 0.0, 0.0}},
             {"J_s+J_d", {base.lambda1, 0.0, base.lambda3}},
             {"J_s+J_l", {base.lambda1, base.lambda2, 0.0}},
             {"J_s+J_l+J_d", {base.lambda1, base.lambda2, base.lambda3}}}};
}

// Four trainings sharing one seed and one split. With `parallel` they run
// concurrently on independent copies; results do not depend on the mode.
inline std::vector<AblationRow> run_ablation(const TrainConfig& base, const PipelineInputs& in, bool parallel = false,
                                             std::ostream* log = nullptr) {
    const PreparedSplits data = prepare_splits(base, in);
    auto settings = ablation_settings(base.lambda);
    auto one = [&](std::size_t i) {
        TrainConfig cfg = base;
        cfg.lambda = settings[i].second;
        auto r = run_training(cfg, data, parallel ? nullptr : log);
        return AblationRow{settings[i].first, cfg.lambda, r.test_metrics, r.history.best_checkpoint};
    };
    std::vector<AblationRow> rows;
    if (parallel) {
        std::vector<std::future<AblationRow>> fs;
        for (std::size_t i = 0; i < settings.size(); ++i) fs.push_back(std::async(std::launch::async, one, i));
        for (auto& f : fs) rows.push_back(f.get());
    } else {
        for (std::size_t i = 0; i < settings.size(); ++i) {
            if (log) *log << "== " << settings[i].first << '\n';
            rows.push_back(one(i));
        }
    }
    return rows;
}

inline nlohmann::json to_json(const std::vector<AblationRow>& rows) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
        j.push_back({{"objective", r.objective},
                     {"lambda", {r.lambda.lambda1, r.lambda.lambda2, r.lambda.lambda3}},
                     {"precision", r.metrics.precision},
                     {"recall", r.metrics.recall},
                     {"macro_f1", r.metrics.macro_f1},
                     {"accuracy", r.metrics.accuracy},
                     {"best_checkpoint", r.best_checkpoint}});
    }
    return j;
}

inline void print_ablation_table(const std::vector<AblationRow>& rows, std::ostream& out) {
    out << std::left << std::setw(14) << "Objective" << std::right << std::setw(8) << "Pre." << std::setw(8) << "Rec."
        << std::setw(8) << "F1" << std::setw(8) << "Acc." << '\n';
    out << std::fixed << std::setprecision(1);
    for (const auto& r : rows)
        out << std::left << std::setw(14) << r.objective << std::right << std::setw(8) << 100 * r.metrics.precision
            << std::setw(8) << 100 * r.metrics.recall << std::setw(8) << 100 * r.metrics.macro_f1 << std::setw(8)
            << 100 * r.metrics.accuracy << '\n';
    out.unsetf(std::ios::fixed);
}

}  // namespace dcnet

#endif  // DCNET_PIPELINE_HPP
