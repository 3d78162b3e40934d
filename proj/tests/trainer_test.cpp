#include <gtest/gtest.h>

#include <sstream>

#include "dcnet/pipeline.hpp"
#include "dcnet/trainer.hpp"
#include "test_util.hpp"

using namespace dcnet;

namespace {

TrainConfig small_config(std::size_t epochs = 4) {
    auto c = synthetic_config();
    c.model.encoder.hidden_dim = 8;
    c.model.encoder.input_dim = 8;
    c.max_epochs = epochs;
    c.checkpoint_every = 4;
    return c;
}

PipelineInputs synthetic_inputs(std::size_t n, std::uint64_t seed) {
    auto syn = gen_synthetic(n, seed);
    return {syn.corpus, std::nullopt, syn.lexicon, std::nullopt};
}

template <class T>
std::vector<std::vector<T>> all_values(const DCNet<T>& m) {
    std::vector<std::vector<T>> out;
    for (const auto& p : m.params()) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
    return out;
}

std::string history_text(const TrainHistory& h) {
    std::ostringstream s;
    write_history_jsonl(h, s);
    return s.str();
}

}  // namespace

// One fixed batch, sarcasm loss only: 50 Adam steps must lower the loss.
TEST(Trainer, FixedBatchLossDecreases) {
    auto syn = gen_synthetic(32, 4);
    auto prepared = prepare(syn.corpus.examples, syn.lexicon);
    auto vocab = build_vocabulary(prepared);
    auto enc = encode(prepared, vocab);
    auto cfg = small_config();
    DCNet<float> m(cfg.model, vocab.size(), 1);
    m.set_embedding(random_embeddings(vocab, 8, 1).matrix);
    AdamState<float> adam(m.params(), {});
    const LearningRates lr{{ParamGroup::Embedding, 1e-4}, {ParamGroup::Other, 1e-3}};
    std::vector<std::size_t> idx(32);
    std::iota(idx.begin(), idx.end(), 0);
    auto batch = make_batch(enc, idx);
    Rng rng(0);
    auto step = [&] {
        LossBreakdown sum;
        for (std::size_t r = 0; r < batch.size(); ++r)
            sum += m.accumulate_gradients(batch.view(r), batch.labels[r], {1, 0, 0}, 1.0f / 32, false, rng);
        adam_step(m.params(), adam, lr);
        return sum.total / 32;
    };
    const double initial = step();
    double last = initial;
    for (int i = 1; i < 50; ++i) last = step();
    EXPECT_LT(last, initial);
}

TEST(Trainer, SyntheticLossDropsTenfold) {
    auto cfg = synthetic_config();  // H = 32, lambda = (1, 1, 1), batch 32, <= 20 epochs
    auto data = prepare_splits(cfg, synthetic_inputs(400, 13));
    DCNet<float> fresh(cfg.model, data.vocab.size(), cfg.seed);
    fresh.set_embedding(data.embeddings.matrix);
    double initial = 0;
    for (const auto& ex : data.train) initial += loss(fresh.infer(ex.view()), ex.labels, cfg.lambda).total;
    initial /= static_cast<double>(data.train.size());

    auto res = train<float>(cfg, data.train, data.valid, data.vocab, data.embeddings);
    ASSERT_FALSE(res.history.records.empty());
    const double final_loss = res.history.records.back().train_loss.total;
    EXPECT_LT(final_loss, 0.1 * initial) << "initial " << initial;
    EXPECT_LE(res.history.records.back().epoch, 20u);
}

TEST(Trainer, DeterministicUnderSeed) {
    auto cfg = small_config(3);
    auto in = synthetic_inputs(120, 2);
    auto a = run_pipeline(cfg, in);
    auto b = run_pipeline(cfg, in);
    EXPECT_EQ(history_text(a.history), history_text(b.history));
    EXPECT_EQ(all_values(a.best_model), all_values(b.best_model));
    EXPECT_EQ(to_json(a.test_metrics), to_json(b.test_metrics));

    cfg.seed = 14;
    auto c = run_pipeline(cfg, in);
    EXPECT_NE(all_values(a.best_model), all_values(c.best_model));
}

TEST(Trainer, PadRowStaysZero) {
    auto cfg = small_config(2);
    cfg.model.dropout_embedding = 0.5;
    auto res = run_pipeline(cfg, synthetic_inputs(120, 3));
    for (float v : res.best_model.embedding().row(0)) EXPECT_EQ(v, 0.0f);
}

TEST(Trainer, CheckpointCadenceAndSelection) {
    auto cfg = small_config(3);
    auto data = prepare_splits(cfg, synthetic_inputs(200, 5));
    auto res = train<float>(cfg, data.train, data.valid, data.vocab, data.embeddings);
    const auto& h = res.history;
    const std::size_t batches_per_epoch = (data.train.size() + cfg.batch_size - 1) / cfg.batch_size;
    ASSERT_FALSE(h.records.empty());
    for (std::size_t i = 0; i + 1 < h.records.size(); ++i) EXPECT_EQ(h.records[i].step, (i + 1) * cfg.checkpoint_every);
    EXPECT_EQ(h.records.back().step, batches_per_epoch * cfg.max_epochs);
    EXPECT_EQ(h.stop_reason, "max_epochs");

    // The kept parameters are the first checkpoint with the highest macro-F1.
    double best = -1;
    std::size_t best_ck = 0;
    for (const auto& r : h.records)
        if (r.valid.macro_f1 > best) {
            best = r.valid.macro_f1;
            best_ck = r.checkpoint;
        }
    EXPECT_EQ(h.best_checkpoint, best_ck);
    auto again = evaluate(res.best_model, data.valid, data.vocab.fingerprint());
    EXPECT_EQ(to_json(again), to_json(h.records[best_ck - 1].valid));
}

TEST(Trainer, PatienceStopsEarly) {
    auto cfg = small_config(50);
    cfg.patience = 2;
    cfg.checkpoint_every = 1;
    cfg.lr_other = 1e-9;  // nothing improves
    cfg.lr_embedding = 1e-9;
    auto data = prepare_splits(cfg, synthetic_inputs(120, 6));
    auto res = train<float>(cfg, data.train, data.valid, data.vocab, data.embeddings);
    EXPECT_EQ(res.history.stop_reason, "patience");
    EXPECT_LT(res.history.records.back().epoch, 50u);
}

TEST(Trainer, NonFiniteLossRaises) {
    auto cfg = small_config(3);
    cfg.lr_other = 1e30;
    auto data = prepare_splits(cfg, synthetic_inputs(120, 6));
    EXPECT_THROW(train<float>(cfg, data.train, data.valid, data.vocab, data.embeddings), NumericError);
}

TEST(Evaluate, MatchesHandBuiltConfusion) {
    auto cfg = small_config();
    auto syn = gen_synthetic(8, 1);
    auto prepared = prepare(syn.corpus.examples, syn.lexicon);
    auto vocab = build_vocabulary(prepared);
    auto enc = encode(prepared, vocab);
    DCNet<float> m(cfg.model, vocab.size(), 3);
    m.set_embedding(random_embeddings(vocab, 8, 3).matrix);
    std::size_t conf[2][2] = {};
    for (const auto& e : enc) {
        auto p = m.infer(e.view()).P_s;
        ++conf[e.labels.y_s][p[1] > p[0] ? 1 : 0];
    }
    auto met = evaluate(m, enc, vocab.fingerprint());
    for (int g = 0; g < 2; ++g)
        for (int p = 0; p < 2; ++p) EXPECT_EQ(met.confusion[g][p], conf[g][p]);
    EXPECT_EQ(to_json(met), to_json(evaluate(m, enc, vocab.fingerprint())));
}

TEST(Evaluate, VocabularyMismatchThrows) {
    auto syn = gen_synthetic(8, 1);
    auto prepared = prepare(syn.corpus.examples, syn.lexicon);
    auto vocab = build_vocabulary(prepared);
    auto enc = encode(prepared, vocab);
    DCNet<float> m(small_config().model, vocab.size(), 3);
    EXPECT_THROW(evaluate(m, enc, vocab.fingerprint() ^ 1u), DataError);
}

TEST(Pipeline, TestMetricsComeFromBestCheckpoint) {
    auto cfg = small_config(3);
    auto res = run_pipeline(cfg, synthetic_inputs(160, 8));
    auto m = evaluate(res.best_model, res.data.test, res.data.vocab.fingerprint());
    EXPECT_EQ(to_json(m), to_json(res.test_metrics));
    EXPECT_EQ(res.data.manifest.test.size(), 32u);
    EXPECT_EQ(res.data.manifest.valid.size(), 6u);
}

TEST(Pipeline, SeparateTestCorpusIsUsedAsIs) {
    auto cfg = small_config(1);
    auto in = synthetic_inputs(100, 8);
    in.test_corpus = gen_synthetic(20, 9).corpus;
    auto data = prepare_splits(cfg, in);
    EXPECT_EQ(data.test.size(), 20u);
    EXPECT_EQ(data.train.size() + data.valid.size(), 100u);
}

TEST(Pipeline, Float64MatchesShapes) {
    auto cfg = small_config(1);
    cfg.precision = Precision::Float64;
    auto res = run_pipeline(cfg, synthetic_inputs(100, 8));
    EXPECT_EQ(res.best_model.params().size(), DCNet<float>(cfg.model, res.data.vocab.size(), 0).params().size());
}

TEST(Pipeline, ArtifactsWritten) {
    auto cfg = small_config(1);
    auto res = run_pipeline(cfg, synthetic_inputs(100, 8));
    testutil::TempDir dir;
    write_artifacts(cfg, res, dir.path());
    for (const char* f : {"model.ckpt", "history.jsonl", "metrics.json", "split.json"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    auto metrics = nlohmann::json::parse(testutil::read_file(dir / "metrics.json"));
    EXPECT_EQ(metrics["best_checkpoint"], res.history.best_checkpoint);
    auto ck = load_checkpoint(dir / "model.ckpt");
    EXPECT_EQ(ck.vocab.fingerprint(), res.data.vocab.fingerprint());
}

TEST(Ablation, FourObjectivesSharingOneSplit) {
    auto cfg = small_config(1);
    cfg.lambda = {1, 0.5, 0.25};
    auto settings = ablation_settings(cfg.lambda);
    EXPECT_EQ(settings[0].first, "J_s");
    EXPECT_EQ(settings[1].first, "J_s+J_d");
    EXPECT_EQ(settings[2].first, "J_s+J_l");
    EXPECT_EQ(settings[3].first, "J_s+J_l+J_d");
    EXPECT_EQ(settings[1].second.lambda2, 0.0);
    EXPECT_EQ(settings[1].second.lambda3, 0.25);
    EXPECT_EQ(settings[2].second.lambda2, 0.5);
    EXPECT_EQ(settings[2].second.lambda3, 0.0);

    auto in = synthetic_inputs(100, 8);
    auto seq = run_ablation(cfg, in, false);
    auto par = run_ablation(cfg, in, true);
    ASSERT_EQ(seq.size(), 4u);
    EXPECT_EQ(to_json(seq), to_json(par));

    std::ostringstream table;
    print_ablation_table(seq, table);
    std::string line;
    std::istringstream rows(table.str());
    int n = 0;
    while (std::getline(rows, line)) ++n;
    EXPECT_EQ(n, 5);
}
