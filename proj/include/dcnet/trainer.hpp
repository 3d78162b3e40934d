#ifndef DCNET_TRAINER_HPP
#define DCNET_TRAINER_HPP

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcnet/adam.hpp"
#include "dcnet/config.hpp"
#include "dcnet/data.hpp"
#include "dcnet/error.hpp"
#include "dcnet/metrics.hpp"
#include "dcnet/model.hpp"

namespace dcnet {

struct CheckpointRecord {
    std::size_t checkpoint = 0;  // 1-based
    std::size_t step = 0;        // mini-batches seen
    std::size_t epoch = 0;       // 1-based
    LossBreakdown train_loss;    // mean over batches since the previous checkpoint
    Metrics valid;
};

struct TrainHistory {
    std::vector<CheckpointRecord> records;
    std::size_t best_checkpoint = 0;  // 1-based, 0 when no checkpoint was taken
    std::string stop_reason;
};

inline nlohmann::json to_json(const CheckpointRecord& r) {
    return {{"checkpoint", r.checkpoint},
            {"step", r.step},
            {"epoch", r.epoch},
            {"train_loss", r.train_loss.total},
            {"j_s", r.train_loss.j_s},
            {"j_l", r.train_loss.j_l},
            {"j_d", r.train_loss.j_d},
            {"valid", to_json(r.valid)}};
}

inline void write_history_jsonl(const TrainHistory& h, std::ostream& out) {
    for (const auto& r : h.records) {
        auto j = to_json(r);
        j["best"] = r.checkpoint == h.best_checkpoint;
        out << j.dump() << '\n';
    }
}

template <class T>
struct TrainResult {
    DCNet<T> best_model;
    TrainHistory history;
};

// Runs the model over every example with dropout off and scores the sarcasm
// predictions. Examples must have been indexed with the model's vocabulary.
template <class T>
Metrics evaluate(const DCNet<T>& model, const std::vector<EncodedExample>& examples,
                 std::uint32_t vocab_fingerprint) {
    std::vector<int> preds, golds;
    preds.reserve(examples.size());
    golds.reserve(examples.size());
    for (const auto& ex : examples) {
        if (ex.vocab_fingerprint != vocab_fingerprint)
            throw DataError("example '" + ex.id + "' was indexed with a different vocabulary");
        preds.push_back(predict(model.infer(ex.view())));
        golds.push_back(ex.labels.y_s);
    }
    return compute(preds, golds);
}

// Mini-batch Adam over the weighted three-part loss. Every
// `checkpoint_every` batches (and once more at the end if the last batch was
// not a checkpoint) the model is scored on `valid`; the parameters with the
// best macro-F1 so far are kept. Training stops after `max_epochs` or after
// `patience` checkpoints without improvement.
template <class T>
TrainResult<T> train(const TrainConfig& cfg, const std::vector<EncodedExample>& train_set,
                     const std::vector<EncodedExample>& valid_set, const Vocabulary& vocab,
                     const EmbeddingMatrix& embeddings, std::ostream* log = nullptr) {
    cfg.validate();
    if (train_set.empty()) throw DataError("empty training set");
    if (valid_set.empty()) throw DataError("empty validation set");
    const auto fp = vocab.fingerprint();

    DCNet<T> model(cfg.model, vocab.size(), cfg.seed);
    model.set_embedding(embeddings.matrix);
    AdamState<T> adam(model.params(), AdamConfig{cfg.beta1, cfg.beta2, cfg.adam_eps});
    const LearningRates lrs{{ParamGroup::Embedding, cfg.lr_embedding}, {ParamGroup::Other, cfg.lr_other}};

    Rng shuffle_rng = Rng::derive(cfg.seed, 0x73687566ULL);
    Rng dropout_rng = Rng::derive(cfg.seed, 0x64726f70ULL);

    TrainResult<T> result{model, {}};
    double best_f1 = -1.0;
    std::size_t since_best = 0;
    std::size_t step = 0;
    LossBreakdown running;
    std::size_t running_batches = 0;
    bool stop = false;

    auto take_checkpoint = [&](std::size_t epoch) {
        CheckpointRecord rec;
        rec.checkpoint = result.history.records.size() + 1;
        rec.step = step;
        rec.epoch = epoch;
        rec.train_loss = running.scaled(1.0 / static_cast<double>(std::max<std::size_t>(running_batches, 1)));
        rec.valid = evaluate(model, valid_set, fp);
        running = {};
        running_batches = 0;
        if (rec.valid.macro_f1 > best_f1) {
            best_f1 = rec.valid.macro_f1;
            since_best = 0;
            result.best_model = model;
            result.history.best_checkpoint = rec.checkpoint;
        } else if (++since_best >= cfg.patience) {
            stop = true;
            result.history.stop_reason = "patience";
        }
        if (log) {
            *log << "checkpoint " << rec.checkpoint << " step " << rec.step << " epoch " << epoch << std::fixed
                 << std::setprecision(4) << " loss " << rec.train_loss.total << " (J_s " << rec.train_loss.j_s
                 << " J_l " << rec.train_loss.j_l << " J_d " << rec.train_loss.j_d << ") valid macro-F1 "
                 << rec.valid.macro_f1 << (result.history.best_checkpoint == rec.checkpoint ? " *" : "") << '\n';
            log->unsetf(std::ios::fixed);
        }
        result.history.records.push_back(rec);
    };

    std::size_t epoch = 0;
    for (epoch = 1; epoch <= cfg.max_epochs && !stop; ++epoch) {
        auto batches = make_batches(train_set, cfg.batch_size, shuffle_rng);
        for (const auto& batch : batches) {
            const T scale = T{1} / static_cast<T>(batch.size());
            LossBreakdown sum;
            for (std::size_t r = 0; r < batch.size(); ++r)
                sum += model.accumulate_gradients(batch.view(r), batch.labels[r], cfg.lambda, scale, true,
                                                  dropout_rng);
            LossBreakdown mean = sum.scaled(1.0 / static_cast<double>(batch.size()));
            if (!std::isfinite(mean.total) || !std::isfinite(grad_norm(model.params()))) {
                nlohmann::json dump{{"step", step + 1},
                                    {"epoch", epoch},
                                    {"loss", mean.total},
                                    {"j_s", mean.j_s},
                                    {"j_l", mean.j_l},
                                    {"j_d", mean.j_d}};
                for (auto i : batch.indices) dump["example_ids"].push_back(train_set[i].id);
                throw NumericError("non-finite loss or gradient: " + dump.dump());
            }
            clip_grad_norm(model.params(), cfg.clip_norm);
            adam_step(model.params(), adam, lrs);
            running += mean;
            ++running_batches;
            ++step;
            if (step % cfg.checkpoint_every == 0) {
                take_checkpoint(epoch);
                if (stop) break;
            }
        }
    }
    if (!stop) {
        result.history.stop_reason = "max_epochs";
        if (running_batches > 0) take_checkpoint(std::min(epoch - 1, cfg.max_epochs));
    }
    return result;
}

}  // namespace dcnet

#endif  // DCNET_TRAINER_HPP
