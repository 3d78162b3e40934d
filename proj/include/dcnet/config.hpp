#ifndef DCNET_CONFIG_HPP
#define DCNET_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dcnet/error.hpp"
#include "dcnet/model.hpp"

namespace dcnet {

enum class Precision { Float32, Float64 };

inline std::string_view to_string(Precision p) { return p == Precision::Float64 ? "float64" : "float32"; }

inline Precision parse_precision(std::string_view s) {
    if (s == "float32" || s == "f32") return Precision::Float32;
    if (s == "float64" || s == "f64") return Precision::Float64;
    throw std::invalid_argument("unknown precision '" + std::string(s) + "'");
}

struct TrainConfig {
    // optimization
    std::size_t batch_size = 32;
    std::size_t checkpoint_every = 16;  // mini-batches between validation checkpoints
    std::size_t max_epochs = 30;
    std::size_t patience = 10;          // checkpoints without improvement before stopping
    double lr_other = 1e-3;
    double lr_embedding = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 0.0;             // 0 disables clipping
    LossWeights lambda;
    std::uint64_t seed = 13;
    Precision precision = Precision::Float32;

    // model
    ModelConfig model;

    // data
    double valid_frac = 0.05;
    double test_frac = 0.2;  // used only when no separate test file is given

    void validate() const {
        auto need = [](bool ok, const char* what) {
            if (!ok) throw std::invalid_argument(std::string("config: ") + what);
        };
        need(batch_size >= 1, "batch_size must be >= 1");
        need(checkpoint_every >= 1, "checkpoint_every must be >= 1");
        need(max_epochs >= 1, "max_epochs must be >= 1");
        need(patience >= 1, "patience must be >= 1");
        need(lr_other > 0 && lr_embedding > 0, "learning rates must be > 0");
        need(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1, "Adam betas must be in (0, 1)");
        need(adam_eps > 0, "adam_eps must be > 0");
        need(lambda.lambda1 > 0, "lambda1 must be > 0");
        need(lambda.lambda2 >= 0 && lambda.lambda3 >= 0, "lambda2 and lambda3 must be >= 0");
        need(model.dropout_embedding >= 0 && model.dropout_embedding < 1, "dropout_embedding must be in [0, 1)");
        need(model.encoder.input_dim >= 1 && model.encoder.hidden_dim >= 1, "encoder dims must be >= 1");
        need(model.init_range > 0, "init_range must be > 0");
        need(valid_frac > 0 && valid_frac < 1, "valid_frac must be in (0, 1)");
        need(test_frac > 0 && test_frac < 1, "test_frac must be in (0, 1)");
    }
};

// SemEval Tweets setting: no embedding dropout, lambda = (1, 1e-4, 3e-1).
inline TrainConfig tweets_config() {
    TrainConfig c;
    c.model.dropout_embedding = 0.0;
    c.lambda = {1.0, 1e-4, 3e-1};
    return c;
}

// IAC setting: embedding dropout 0.5, all lambdas 1.
inline TrainConfig iac_config() {
    TrainConfig c;
    c.model.dropout_embedding = 0.5;
    c.lambda = {1.0, 1.0, 1.0};
    return c;
}

// Small model for the generated corpus: H = 32, 32-d random embeddings.
inline TrainConfig synthetic_config() {
    TrainConfig c;
    c.max_epochs = 20;
    c.model.encoder.input_dim = 32;
    c.model.encoder.hidden_dim = 32;
    c.model.dropout_embedding = 0.0;
    c.lambda = {1.0, 1.0, 1.0};
    return c;
}

inline nlohmann::json model_config_json(const ModelConfig& m) {
    return {{"input_dim", m.encoder.input_dim},
            {"hidden_dim", m.encoder.hidden_dim},
            {"pooling", std::string(to_string(m.encoder.pooling))},
            {"proj_dim", m.channel_dim()},
            {"analyzer", std::string(to_string(m.analyzer))},
            {"dropout_embedding", m.dropout_embedding},
            {"init_range", m.init_range}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig m = {}) {
    if (j.contains("input_dim")) j.at("input_dim").get_to(m.encoder.input_dim);
    if (j.contains("hidden_dim")) j.at("hidden_dim").get_to(m.encoder.hidden_dim);
    if (j.contains("pooling")) m.encoder.pooling = parse_pooling(j.at("pooling").get<std::string>());
    if (j.contains("proj_dim")) j.at("proj_dim").get_to(m.proj_dim);
    if (j.contains("analyzer")) m.analyzer = parse_analyzer(j.at("analyzer").get<std::string>());
    if (j.contains("dropout_embedding")) j.at("dropout_embedding").get_to(m.dropout_embedding);
    if (j.contains("init_range")) j.at("init_range").get_to(m.init_range);
    return m;
}

inline nlohmann::json to_json(const TrainConfig& c) {
    nlohmann::json j = model_config_json(c.model);
    j.update({{"batch_size", c.batch_size},
              {"checkpoint_every", c.checkpoint_every},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"lr_other", c.lr_other},
              {"lr_embedding", c.lr_embedding},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_eps", c.adam_eps},
              {"clip_norm", c.clip_norm},
              {"lambda1", c.lambda.lambda1},
              {"lambda2", c.lambda.lambda2},
              {"lambda3", c.lambda.lambda3},
              {"seed", c.seed},
              {"precision", std::string(to_string(c.precision))},
              {"valid_frac", c.valid_frac},
              {"test_frac", c.test_frac}});
    return j;
}

// Keys absent from `j` keep the values already in `base`. A `preset` key of
// "tweets", "iac" or "synthetic" selects the starting point instead of `base`.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
    if (j.contains("preset")) {
        auto p = j.at("preset").get<std::string>();
        if (p == "tweets")
            base = tweets_config();
        else if (p == "iac")
            base = iac_config();
        else if (p == "synthetic")
            base = synthetic_config();
        else
            throw std::invalid_argument("unknown preset '" + p + "'");
    }
    TrainConfig c = base;
    auto get = [&](const char* key, auto& dst) {
        if (j.contains(key)) j.at(key).get_to(dst);
    };
    get("batch_size", c.batch_size);
    get("checkpoint_every", c.checkpoint_every);
    get("max_epochs", c.max_epochs);
    get("patience", c.patience);
    get("lr_other", c.lr_other);
    get("lr_embedding", c.lr_embedding);
    get("beta1", c.beta1);
    get("beta2", c.beta2);
    get("adam_eps", c.adam_eps);
    get("clip_norm", c.clip_norm);
    get("lambda1", c.lambda.lambda1);
    get("lambda2", c.lambda.lambda2);
    get("lambda3", c.lambda.lambda3);
    get("seed", c.seed);
    if (j.contains("precision")) c.precision = parse_precision(j.at("precision").get<std::string>());
    get("valid_frac", c.valid_frac);
    get("test_frac", c.test_frac);
    c.model = model_config_from_json(j, c.model);
    return c;
}

inline TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config: " + path.string());
    try {
        return train_config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad config " + path.string() + ": " + e.what());
    }
}

}  // namespace dcnet

#endif  // DCNET_CONFIG_HPP
