#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "dcnet/cli.hpp"
#include "test_util.hpp"

using testutil::read_file;
using testutil::TempDir;
using testutil::write_file;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "dcnet");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = dcnet::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<nlohmann::json> jsonl(const std::string& text) {
    std::vector<nlohmann::json> v;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) v.push_back(nlohmann::json::parse(line));
    return v;
}

// Small enough to train in well under a second.
const std::vector<std::string> kTiny = {"--corpus", "synthetic", "--n", "120", "--hidden-dim", "6",
                                        "--input-dim", "6", "--max-epochs", "2"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

}  // namespace

TEST(Cli, UnknownFlagIsUsageError) {
    auto r = run({"gradcheck", "--frobnicate"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE((r.out + r.err).find("Usage"), std::string::npos);
}

TEST(Cli, MissingSubcommandOrRequiredFlag) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"bogus"}).code, 1);
    EXPECT_EQ(run({"train", "--corpus", "synthetic"}).code, 1);  // no --out
    EXPECT_EQ(run({"eval", "--corpus", "synthetic"}).code, 1);   // no --checkpoint
    EXPECT_EQ(run({"train", "--corpus", "x.tsv", "--analyzer", "cosine", "--out", "d"}).code, 1);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST(Cli, LexiconRequiredForRealCorpus) {
    TempDir dir;
    auto c = write_file(dir / "c.tsv", "1\tgreat exam\n");
    auto r = run({"decompose", "--corpus", c.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("--lexicon"), std::string::npos);
}

TEST(Cli, GradcheckPasses) {
    auto r = run({"gradcheck", "--seed", "7"});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("max relative error"), std::string::npos);
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, MissingInputIsDataError) {
    auto r = run({"decompose", "--corpus", "/nonexistent.tsv", "--lexicon", "synthetic"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("cannot open"), std::string::npos);
    EXPECT_EQ(run({"eval", "--checkpoint", "/nonexistent.ckpt", "--corpus", "synthetic"}).code, 2);
}

TEST(Cli, DecomposeThenLabel) {
    TempDir dir;
    auto c = write_file(dir / "c.tsv", "1\tFinal exam is the best gift on my birthday\n0\tthe exam happens\n");
    auto l = write_file(dir / "lex.tsv", "best\tpositive\ngift\tpositive\n");
    auto d = run({"decompose", "--corpus", c.string(), "--lexicon", l.string(), "--out", (dir / "d.jsonl").string()});
    ASSERT_EQ(d.code, 0) << d.err;
    auto rows = jsonl(read_file(dir / "d.jsonl"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0]["w_l"], nlohmann::json({"best", "gift"}));
    EXPECT_EQ(rows[0]["fallback_used"], false);
    EXPECT_EQ(rows[1]["fallback_used"], true);
    for (const char* k : {"text", "tokens", "w_l", "w_d", "fallback_used"}) EXPECT_TRUE(rows[0].contains(k)) << k;

    auto lab = run({"label", "--in", (dir / "d.jsonl").string(), "--lexicon", l.string()});
    ASSERT_EQ(lab.code, 0) << lab.err;
    auto labels = jsonl(lab.out);
    ASSERT_EQ(labels.size(), 2u);
    EXPECT_EQ(labels[0]["y_s"], 1);
    EXPECT_EQ(labels[0]["y_l"], "positive");
    EXPECT_EQ(labels[0]["y_d"], "negative");
    EXPECT_EQ(labels[0]["aux_mask"], true);
    EXPECT_TRUE(labels[1]["y_l"].is_null());
    EXPECT_EQ(labels[1]["aux_mask"], false);
}

TEST(Cli, LabelRejectsBadInput) {
    TempDir dir;
    auto bad = write_file(dir / "bad.jsonl", "{\"id\": \"1\", \"y_s\": 1}\n");
    auto r = run({"label", "--in", bad.string(), "--lexicon", "synthetic"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find(":1:"), std::string::npos);
}

TEST(Cli, OutputsAreByteIdenticalAcrossRuns) {
    TempDir dir;
    auto gen = [&](const std::string& d) {
        return run({"gen-synthetic", "--n", "40", "--seed", "5", "--out", (dir / d).string()}).code;
    };
    ASSERT_EQ(gen("a"), 0);
    ASSERT_EQ(gen("b"), 0);
    EXPECT_EQ(read_file(dir / "a" / "corpus.tsv"), read_file(dir / "b" / "corpus.tsv"));
    EXPECT_EQ(read_file(dir / "a" / "lexicon.tsv"), read_file(dir / "b" / "lexicon.tsv"));

    auto corpus = (dir / "a" / "corpus.tsv").string(), lex = (dir / "a" / "lexicon.tsv").string();
    auto d1 = run({"decompose", "--corpus", corpus, "--lexicon", lex});
    auto d2 = run({"decompose", "--corpus", corpus, "--lexicon", lex});
    EXPECT_EQ(d1.out, d2.out);

    for (const char* d : {"t1", "t2"})
        ASSERT_EQ(run(with({"train", "--out", (dir / d).string()}, kTiny)).code, 0);
    for (const char* f : {"model.ckpt", "metrics.json", "history.jsonl", "split.json"})
        EXPECT_EQ(read_file(dir / "t1" / f), read_file(dir / "t2" / f)) << f;

    auto ck = (dir / "t1" / "model.ckpt").string();
    for (const char* f : {"r1.tsv", "r2.tsv"})
        ASSERT_EQ(run({"export-reps", "--checkpoint", ck, "--corpus", corpus, "--lexicon", lex, "--out",
                       (dir / f).string()})
                      .code,
                  0);
    EXPECT_EQ(read_file(dir / "r1.tsv"), read_file(dir / "r2.tsv"));
}

TEST(Cli, TrainEvalExport) {
    TempDir dir;
    auto t = run(with({"train", "--out", (dir / "run").string(), "--analyzer", "subtract"}, kTiny));
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_NE(t.out.find("test macro-F1"), std::string::npos);
    auto ck = dcnet::load_checkpoint(dir / "run" / "model.ckpt");
    EXPECT_EQ(ck.model_config().analyzer, dcnet::Analyzer::Subtract);
    EXPECT_EQ(ck.model_config().encoder.hidden_dim, 6u);

    auto e = run({"eval", "--checkpoint", (dir / "run" / "model.ckpt").string(), "--corpus", "synthetic", "--n", "120"});
    ASSERT_EQ(e.code, 0) << e.err;
    auto m = nlohmann::json::parse(e.out);
    EXPECT_GE(m["macro_f1"].get<double>(), 0.0);
    EXPECT_EQ(m["confusion"][0][0].get<int>() + m["confusion"][0][1].get<int>() + m["confusion"][1][0].get<int>() +
                  m["confusion"][1][1].get<int>(),
              120);

    auto x = run({"export-reps", "--checkpoint", (dir / "run" / "model.ckpt").string(), "--corpus", "synthetic",
                  "--n", "20", "--out", (dir / "reps.tsv").string()});
    ASSERT_EQ(x.code, 0) << x.err;
    auto text = read_file(dir / "reps.tsv");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 40);
    auto first = text.substr(0, text.find('\n'));
    EXPECT_EQ(std::count(first.begin(), first.end(), '\t'), 2 + 12);
}

TEST(Cli, LambdaFlagsReachConfig) {
    TempDir dir;
    auto t = run(with({"train", "--out", (dir / "run").string(), "--lambda1", "2", "--lambda2", "0", "--lambda3",
                       "0.5", "--seed", "21"},
                      kTiny));
    ASSERT_EQ(t.code, 0) << t.err;
    auto ck = dcnet::load_checkpoint(dir / "run" / "model.ckpt");
    EXPECT_EQ(ck.config["lambda1"], 2.0);
    EXPECT_EQ(ck.config["lambda2"], 0.0);
    EXPECT_EQ(ck.config["lambda3"], 0.5);
    EXPECT_EQ(ck.config["seed"], 21);
}

TEST(Cli, ConfigFromEnvironment) {
    TempDir dir;
    auto cfg = write_file(dir / "cfg.json", R"({"hidden_dim": 5, "input_dim": 4, "max_epochs": 1})");
    ::setenv(dcnet::cli::kConfigEnv, cfg.string().c_str(), 1);
    auto t = run({"train", "--corpus", "synthetic", "--n", "100", "--out", (dir / "run").string()});
    ::unsetenv(dcnet::cli::kConfigEnv);
    ASSERT_EQ(t.code, 0) << t.err;
    auto mc = dcnet::load_checkpoint(dir / "run" / "model.ckpt").model_config();
    EXPECT_EQ(mc.encoder.hidden_dim, 5u);
    EXPECT_EQ(mc.encoder.input_dim, 4u);

    // An explicit flag beats the environment.
    auto cfg2 = write_file(dir / "cfg2.json", R"({"hidden_dim": 3, "input_dim": 4, "max_epochs": 1})");
    ::setenv(dcnet::cli::kConfigEnv, "/nonexistent.json", 1);
    auto t2 = run({"train", "--corpus", "synthetic", "--n", "100", "--config", cfg2.string(), "--out",
                   (dir / "run2").string()});
    ::unsetenv(dcnet::cli::kConfigEnv);
    ASSERT_EQ(t2.code, 0) << t2.err;
    EXPECT_EQ(dcnet::load_checkpoint(dir / "run2" / "model.ckpt").model_config().encoder.hidden_dim, 3u);
}

TEST(Cli, BadConfigValues) {
    TempDir dir;
    auto bad_json = write_file(dir / "a.json", "{not json");
    EXPECT_EQ(run(with({"train", "--out", (dir / "r").string(), "--config", bad_json.string()}, kTiny)).code, 2);
    auto bad_value = write_file(dir / "b.json", R"({"batch_size": 0})");
    EXPECT_EQ(run(with({"train", "--out", (dir / "r").string(), "--config", bad_value.string()}, kTiny)).code, 1);
}

TEST(Cli, NonFiniteTrainingExitsThree) {
    TempDir dir;
    auto cfg = write_file(dir / "c.json", R"({"lr_other": 1e30})");
    auto r = run(with({"train", "--out", (dir / "r").string(), "--config", cfg.string()}, kTiny));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("non-finite"), std::string::npos);
}

TEST(Cli, AblateTable) {
    TempDir dir;
    auto r = run(with({"ablate", "--out", (dir / "ab").string()}, kTiny));
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* row : {"J_s ", "J_s+J_d", "J_s+J_l ", "J_s+J_l+J_d"}) EXPECT_NE(r.out.find(row), std::string::npos);
    auto j = nlohmann::json::parse(read_file(dir / "ab" / "ablation.json"));
    ASSERT_EQ(j.size(), 4u);
    EXPECT_EQ(j[0]["objective"], "J_s");
    EXPECT_EQ(j[0]["lambda"][1], 0.0);
    EXPECT_EQ(j[3]["objective"], "J_s+J_l+J_d");

    auto p = run(with({"ablate", "--parallel", "--out", (dir / "ab2").string()}, kTiny));
    ASSERT_EQ(p.code, 0) << p.err;
    EXPECT_EQ(p.out, r.out);
    EXPECT_EQ(read_file(dir / "ab" / "ablation.json"), read_file(dir / "ab2" / "ablation.json"));
}
