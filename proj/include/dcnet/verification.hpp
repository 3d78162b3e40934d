#ifndef DCNET_VERIFICATION_HPP
#define DCNET_VERIFICATION_HPP

// Finite-difference checks of every backward pass, in float64. Each check
// builds a tiny problem whose inputs are registered as parameters, so the
// checker perturbs inputs and weights alike. The scalar objective is a fixed
// random projection of the primitive's output, which exercises every output
// coordinate.

#include <cstdint>
#include <string>
#include <vector>

#include "dcnet/decomposer.hpp"
#include "dcnet/encoder.hpp"
#include "dcnet/gradcheck.hpp"
#include "dcnet/model.hpp"
#include "dcnet/ops.hpp"
#include "dcnet/weak_labeler.hpp"

namespace dcnet::verify {

inline constexpr double kEps = 1e-5;
inline constexpr std::size_t kSamples = 64;

inline Tensor<double> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

// Random sign, magnitude in [lo, hi]; keeps coordinates (and so gradients)
// away from zero, where central differences lose their relative accuracy.
inline Tensor<double> signed_tensor(Shape shape, Rng& rng, double lo = 0.2, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.values()) v = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(lo, hi);
    return t;
}

using cdspan = std::span<const double>;

inline double dot(cdspan a, cdspan b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline GradCheckResult check_affine(std::uint64_t seed, std::size_t d_in = 5, std::size_t d_out = 4) {
    Rng rng(seed);
    ParameterStore<double> s;
    auto W = s.add("W", ParamGroup::Other, random_tensor({d_out, d_in}, rng));
    auto b = s.add("b", ParamGroup::Other, random_tensor({d_out}, rng));
    auto x = s.add("x", ParamGroup::Other, signed_tensor({d_in}, rng));
    auto c = signed_tensor({d_out}, rng);
    auto loss = [&](bool grad) {
        auto y = affine(s.tensor(W), s.tensor(b), s.tensor(x).values());
        if (grad) affine_backward(s.tensor(W), s.tensor(b), s.tensor(x).values(), c.values(), s.tensor(x).grad());
        return dot(y, c.values());
    };
    return grad_check(s, loss, kEps, kSamples, seed);
}

// Inputs are kept at least 0.1 away from the kink.
inline GradCheckResult check_relu(std::uint64_t seed, std::size_t n = 8) {
    Rng rng(seed);
    ParameterStore<double> s;
    Tensor<double> xt({n});
    for (auto& v : xt.values()) v = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.1, 1.0);
    auto x = s.add("x", ParamGroup::Other, xt);
    auto c = random_tensor({n}, rng);
    auto loss = [&](bool grad) {
        auto y = relu(cdspan(s.tensor(x).values()));
        if (grad) relu_backward(cdspan(s.tensor(x).values()), cdspan(c.values()), s.tensor(x).grad());
        return dot(y, c.values());
    };
    return grad_check(s, loss, kEps, kSamples, seed);
}

inline GradCheckResult check_concat(std::uint64_t seed) {
    Rng rng(seed);
    ParameterStore<double> s;
    auto a = s.add("a", ParamGroup::Other, random_tensor({3}, rng));
    auto b = s.add("b", ParamGroup::Other, random_tensor({4}, rng));
    auto c = random_tensor({7}, rng);
    auto loss = [&](bool grad) {
        auto y = concat(cdspan(s.tensor(a).values()), cdspan(s.tensor(b).values()));
        if (grad) concat_backward(cdspan(c.values()), s.tensor(a).grad(), s.tensor(b).grad());
        return dot(y, c.values());
    };
    return grad_check(s, loss, kEps, kSamples, seed);
}

inline GradCheckResult check_softmax_xent(std::uint64_t seed, std::size_t k) {
    Rng rng(seed);
    ParameterStore<double> s;
    auto z = s.add("logits", ParamGroup::Other, random_tensor({k}, rng, -2.0, 2.0));
    const std::size_t gold = rng.index(k);
    auto loss = [&](bool grad) {
        auto r = softmax_xent(cdspan(s.tensor(z).values()), gold);
        if (grad) softmax_xent_backward(cdspan(r.probs), gold, 1.0, s.tensor(z).grad());
        return r.loss;
    };
    return grad_check(s, loss, kEps, kSamples, seed);
}

// Unrolls `steps` LSTM cells from random (h0, c0); the objective projects
// both the last hidden and the last cell state.
inline GradCheckResult check_lstm(std::uint64_t seed, std::size_t steps, std::size_t d_in = 3, std::size_t H = 4) {
    Rng rng(seed);
    ParameterStore<double> s;
    auto Wx = s.add("W_x", ParamGroup::Other, random_tensor({4 * H, d_in}, rng, -0.5, 0.5));
    auto Wh = s.add("W_h", ParamGroup::Other, random_tensor({4 * H, H}, rng, -0.5, 0.5));
    auto b = s.add("b", ParamGroup::Other, random_tensor({4 * H}, rng, -0.5, 0.5));
    auto h0 = s.add("h0", ParamGroup::Other, signed_tensor({H}, rng));
    auto c0 = s.add("c0", ParamGroup::Other, signed_tensor({H}, rng));
    std::vector<std::size_t> xs;
    for (std::size_t t = 0; t < steps; ++t)
        xs.push_back(s.add("x" + std::to_string(t), ParamGroup::Other, signed_tensor({d_in}, rng)));
    auto ch = signed_tensor({H}, rng);
    auto cc = signed_tensor({H}, rng);

    auto loss = [&](bool grad) {
        std::vector<LstmStep<double>> trace;
        std::vector<double> h(s.tensor(h0).values().begin(), s.tensor(h0).values().end());
        std::vector<double> c(s.tensor(c0).values().begin(), s.tensor(c0).values().end());
        for (std::size_t t = 0; t < steps; ++t) {
            trace.push_back(lstm_cell(s.tensor(Wx), s.tensor(Wh), s.tensor(b),
                                      std::span<const double>(s.tensor(xs[t]).values()),
                                      std::span<const double>(h), std::span<const double>(c)));
            h = trace.back().h;
            c = trace.back().c;
        }
        if (grad) {
            std::vector<double> dh(ch.values().begin(), ch.values().end());
            std::vector<double> dc(cc.values().begin(), cc.values().end());
            for (std::size_t t = steps; t-- > 0;) {
                std::vector<double> dh_prev(H, 0.0), dc_prev(H, 0.0);
                lstm_cell_backward(s.tensor(Wx), s.tensor(Wh), s.tensor(b), trace[t], std::span<const double>(dh),
                                   std::span<const double>(dc), s.tensor(xs[t]).grad(), std::span<double>(dh_prev),
                                   std::span<double>(dc_prev));
                dh = std::move(dh_prev);
                dc = std::move(dc_prev);
            }
            auto gh = s.tensor(h0).grad();
            auto gc = s.tensor(c0).grad();
            for (std::size_t k = 0; k < H; ++k) {
                gh[k] += dh[k];
                gc[k] += dc[k];
            }
        }
        return dot(h, ch.values()) + dot(c, cc.values());
    };
    return grad_check(s, loss, kEps, kSamples, seed);
}

inline GradCheckResult check_encoder(std::uint64_t seed, std::size_t len = 4, Pooling pooling = Pooling::FinalState) {
    Rng rng(seed);
    ParameterStore<double> s;
    EncoderConfig cfg{3, 4, pooling};
    BiLstmEncoder<double> enc("enc", cfg, s, rng, 0.5);
    std::vector<std::size_t> xs;
    for (std::size_t t = 0; t < len; ++t)
        xs.push_back(s.add("x" + std::to_string(t), ParamGroup::Other, random_tensor({cfg.input_dim}, rng)));
    auto c = random_tensor({enc.output_dim()}, rng);
    auto loss = [&](bool grad) {
        Sequence<double> seq;
        for (auto i : xs) seq.emplace_back(s.tensor(i).values().begin(), s.tensor(i).values().end());
        EncoderTrace<double> tr;
        auto v = enc.encode(s, seq, &tr);
        if (grad) {
            auto dxs = enc.backward(s, tr, c.values());
            for (std::size_t t = 0; t < xs.size(); ++t) {
                auto g = s.tensor(xs[t]).grad();
                for (std::size_t k = 0; k < g.size(); ++k) g[k] += dxs[t][k];
            }
        }
        return dot(v, c.values());
    };
    return grad_check(s, loss, kEps, kSamples, seed);
}

// Five-token example "oh great , exam again" split by a one-word lexicon.
struct TinyExample {
    std::vector<std::int32_t> w_t, w_l, w_d;
    WeakLabels labels;
    ExampleView view() const { return {w_t, w_l, w_d}; }
};

inline TinyExample tiny_example(int y_s = 1) {
    SentimentLexicon lex;
    lex.insert("great", Polarity::Positive);
    const TokenSequence toks = {"oh", "great", ",", "exam", "again"};
    auto parts = decompose(toks, lex);
    auto id = [&](const std::string& t) {
        for (std::size_t i = 0; i < toks.size(); ++i)
            if (toks[i] == t) return static_cast<std::int32_t>(i + 2);
        return std::int32_t{1};
    };
    TinyExample ex;
    for (const auto& t : parts.w_t) ex.w_t.push_back(id(t));
    for (const auto& t : parts.w_l) ex.w_l.push_back(id(t));
    for (const auto& t : parts.w_d) ex.w_d.push_back(id(t));
    ex.labels = weak_labels(count_polarities(parts.w_t, lex), y_s);
    return ex;
}

inline DCNet<double> tiny_model(std::uint64_t seed, Analyzer analyzer = Analyzer::Concat, std::size_t H = 8,
                                std::size_t input_dim = 6) {
    ModelConfig cfg;
    cfg.encoder = {input_dim, H, Pooling::FinalState};
    cfg.analyzer = analyzer;
    cfg.init_range = 1.0;
    DCNet<double> model(cfg, 7, seed);
    Rng rng = Rng::derive(seed, 99);
    Tensor<double> e({7, input_dim});
    for (auto& v : e.values()) v = rng.uniform(-1.0, 1.0);
    model.set_embedding(e);
    return model;
}

// Full three-part loss, dropout off.
inline GradCheckResult check_model(std::uint64_t seed, Analyzer analyzer = Analyzer::Concat, std::size_t H = 8,
                                   const LossWeights& w = {1.0, 1.0, 1.0}) {
    auto model = tiny_model(seed, analyzer, H);
    auto ex = tiny_example();
    Rng rng(seed);
    auto loss = [&](bool grad) {
        if (grad) return model.accumulate_gradients(ex.view(), ex.labels, w, 1.0, false, rng).total;
        return dcnet::loss(model.forward(ex.view(), false, rng), ex.labels, w).total;
    };
    return grad_check(model.params(), loss, kEps, kSamples, seed);
}

struct NamedCheck {
    std::string name;
    GradCheckResult result;
    double tolerance;
    bool passed() const { return result.max_rel_error < tolerance; }
};

// Primitive checks at 1e-5 and the full model at 1e-4.
inline std::vector<NamedCheck> run_all(std::uint64_t seed) {
    std::vector<NamedCheck> out;
    out.push_back({"affine", check_affine(seed), 1e-5});
    out.push_back({"relu", check_relu(seed), 1e-5});
    out.push_back({"concat", check_concat(seed), 1e-5});
    for (std::size_t k = 2; k <= 5; ++k)
        out.push_back({"softmax_xent(k=" + std::to_string(k) + ")", check_softmax_xent(seed + k, k), 1e-5});
    out.push_back({"lstm_cell(1 step)", check_lstm(seed, 1), 1e-5});
    out.push_back({"lstm_cell(3 steps)", check_lstm(seed, 3), 1e-5});
    out.push_back({"bilstm_encoder(4 tokens)", check_encoder(seed), 1e-4});
    out.push_back({"dcnet(concat)", check_model(seed, Analyzer::Concat), 1e-4});
    out.push_back({"dcnet(subtract)", check_model(seed, Analyzer::Subtract), 1e-4});
    return out;
}

}  // namespace dcnet::verify

#endif  // DCNET_VERIFICATION_HPP
