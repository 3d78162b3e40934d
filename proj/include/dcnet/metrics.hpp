#ifndef DCNET_METRICS_HPP
#define DCNET_METRICS_HPP

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>

#include <json.hpp>

namespace dcnet {

struct ClassScores {
    double precision = 0, recall = 0, f1 = 0;
};

// Binary classification scores. precision/recall/macro_f1 are means over the
// two classes; macro_f1 averages the per-class F1 values. Any ratio with a
// zero denominator is 0.
struct Metrics {
    double precision = 0;
    double recall = 0;
    double macro_f1 = 0;
    double accuracy = 0;
    std::array<std::array<std::size_t, 2>, 2> confusion{};  // [gold][pred]
    std::array<ClassScores, 2> per_class{};

    std::size_t total() const { return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1]; }
};

inline Metrics compute(std::span<const int> preds, std::span<const int> golds) {
    if (preds.size() != golds.size()) throw std::invalid_argument("metrics: predictions and golds differ in length");
    if (preds.empty()) throw std::invalid_argument("metrics: no examples");
    Metrics m;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if ((preds[i] != 0 && preds[i] != 1) || (golds[i] != 0 && golds[i] != 1))
            throw std::invalid_argument("metrics: labels must be 0 or 1");
        ++m.confusion[static_cast<std::size_t>(golds[i])][static_cast<std::size_t>(preds[i])];
    }
    auto ratio = [](double num, double den) { return den == 0 ? 0.0 : num / den; };
    for (std::size_t c = 0; c < 2; ++c) {
        const double tp = static_cast<double>(m.confusion[c][c]);
        const double pred_c = static_cast<double>(m.confusion[0][c] + m.confusion[1][c]);
        const double gold_c = static_cast<double>(m.confusion[c][0] + m.confusion[c][1]);
        auto& s = m.per_class[c];
        s.precision = ratio(tp, pred_c);
        s.recall = ratio(tp, gold_c);
        s.f1 = ratio(2 * s.precision * s.recall, s.precision + s.recall);
    }
    m.precision = (m.per_class[0].precision + m.per_class[1].precision) / 2;
    m.recall = (m.per_class[0].recall + m.per_class[1].recall) / 2;
    m.macro_f1 = (m.per_class[0].f1 + m.per_class[1].f1) / 2;
    m.accuracy = static_cast<double>(m.confusion[0][0] + m.confusion[1][1]) / static_cast<double>(m.total());
    return m;
}

inline nlohmann::json to_json(const Metrics& m) {
    return nlohmann::json{{"precision", m.precision},
                          {"recall", m.recall},
                          {"macro_f1", m.macro_f1},
                          {"accuracy", m.accuracy},
                          {"confusion", {{m.confusion[0][0], m.confusion[0][1]}, {m.confusion[1][0], m.confusion[1][1]}}}};
}

}  // namespace dcnet

#endif  // DCNET_METRICS_HPP
