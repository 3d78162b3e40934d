#ifndef DCNET_MODEL_HPP
#define DCNET_MODEL_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcnet/encoder.hpp"
#include "dcnet/error.hpp"
#include "dcnet/ops.hpp"
#include "dcnet/random.hpp"
#include "dcnet/tensor.hpp"
#include "dcnet/weak_labeler.hpp"

namespace dcnet {

// How the analyzer fuses the two channel representations. Cosine is reserved
// and rejected at construction.
enum class Analyzer { Concat, Subtract, Cosine };

inline std::string_view to_string(Analyzer a) {
    switch (a) {
        case Analyzer::Concat: return "concat";
        case Analyzer::Subtract: return "subtract";
        case Analyzer::Cosine: return "cosine";
    }
    return "?";
}

inline Analyzer parse_analyzer(std::string_view s) {
    if (s == "concat") return Analyzer::Concat;
    if (s == "subtract") return Analyzer::Subtract;
    if (s == "cosine") return Analyzer::Cosine;
    throw std::invalid_argument("unknown analyzer '" + std::string(s) + "'");
}

struct ModelConfig {
    EncoderConfig encoder;
    std::size_t proj_dim = 0;  // d'; 0 means 2H
    Analyzer analyzer = Analyzer::Concat;
    double dropout_embedding = 0.0;
    double init_range = 0.1;

    std::size_t channel_dim() const { return proj_dim ? proj_dim : 2 * encoder.hidden_dim; }
};

struct LossWeights {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double lambda3 = 1.0;
};

struct LossBreakdown {
    double total = 0;
    double j_s = 0;  // unweighted sarcasm cross-entropy
    double j_l = 0;  // unweighted literal cross-entropy (0 when masked)
    double j_d = 0;  // unweighted implied cross-entropy (0 when masked)

    LossBreakdown& operator+=(const LossBreakdown& o) {
        total += o.total;
        j_s += o.j_s;
        j_l += o.j_l;
        j_d += o.j_d;
        return *this;
    }
    LossBreakdown scaled(double s) const { return {total * s, j_s * s, j_l * s, j_d * s}; }
};

// Vocabulary indices for the three views of one example.
struct ExampleView {
    std::span<const std::int32_t> w_t, w_l, w_d;
};

template <class T>
struct ForwardOutput {
    std::vector<T> v_L, v_D, v_T;   // encoder outputs, width 2H
    std::vector<T> v_Lp, v_Dp;      // channel representations, width d'
    std::vector<T> P_l, P_d, P_s;   // distributions over 2 classes
};

// Sentiment heads use class 1 = positive, 0 = negative. The sarcasm head
// uses class 1 = sarcastic.
inline int predict_class(std::span<const float> p) { return p[1] > p[0] ? 1 : 0; }
inline int predict_class(std::span<const double> p) { return p[1] > p[0] ? 1 : 0; }

// Argmax of P_s; exact ties go to class 0.
template <class T>
int predict(const ForwardOutput<T>& out) {
    return predict_class(std::span<const T>(out.P_s));
}

// Per-example objective: lambda1 * J_s plus, when the weak labels are
// defined, lambda2 * J_l + lambda3 * J_d.
template <class T>
LossBreakdown loss(const ForwardOutput<T>& out, const WeakLabels& labels, const LossWeights& w) {
    if (labels.y_s != 0 && labels.y_s != 1) throw std::invalid_argument("loss: y_s must be 0 or 1");
    auto xent = [](const std::vector<T>& p, int gold) {
        return -std::log(static_cast<double>(std::max(p[gold], std::numeric_limits<T>::min())));
    };
    LossBreakdown b;
    b.j_s = xent(out.P_s, labels.y_s);
    if (labels.aux_mask) {
        b.j_l = xent(out.P_l, class_index(*labels.y_l));
        b.j_d = xent(out.P_d, class_index(*labels.y_d));
    }
    b.total = w.lambda1 * b.j_s + w.lambda2 * b.j_l + w.lambda3 * b.j_d;
    return b;
}

// Mean of per-example losses.
template <class T>
LossBreakdown batch_loss(std::span<const ForwardOutput<T>> outs, std::span<const WeakLabels> labels,
                         const LossWeights& w) {
    if (outs.size() != labels.size()) throw std::invalid_argument("batch_loss: size mismatch");
    LossBreakdown sum;
    for (std::size_t i = 0; i < outs.size(); ++i) sum += loss(outs[i], labels[i], w);
    return outs.empty() ? sum : sum.scaled(1.0 / static_cast<double>(outs.size()));
}

template <class T>
class DCNet {
public:
    struct ChannelTrace {
        std::vector<std::int32_t> ids;
        Sequence<T> embedded;            // after dropout
        Sequence<T> dropout_scale;
        EncoderTrace<T> encoder;
    };
    struct Trace {
        ChannelTrace lit, imp, txt;
        std::vector<T> cat_L, cat_D;     // [v_L; v_T], [v_D; v_T]
        std::vector<T> z_L, z_D;         // pre-ReLU
        std::vector<T> analyzer_in;
    };

    DCNet() = default;

    DCNet(const ModelConfig& cfg, std::size_t vocab_size, std::uint64_t seed) : cfg_(cfg) {
        if (cfg.analyzer == Analyzer::Cosine)
            throw std::invalid_argument("cosine analyzer is not implemented");
        if (vocab_size < 2) throw std::invalid_argument("vocabulary must include PAD and UNK");
        const std::size_t H2 = 2 * cfg.encoder.hidden_dim, dp = cfg.channel_dim();
        Rng rng = Rng::derive(seed, 0x6d6f64656cULL);
        auto init = [&](Shape shape) {
            Tensor<T> t(shape);
            for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-cfg.init_range, cfg.init_range));
            return t;
        };

        embedding_ = store_.add("embedding", ParamGroup::Embedding,
                                Tensor<T>({vocab_size, cfg.encoder.input_dim}));
        store_[embedding_].frozen_rows = {0};
        enc_L_ = BiLstmEncoder<T>("enc_L", cfg.encoder, store_, rng, cfg.init_range);
        enc_D_ = BiLstmEncoder<T>("enc_D", cfg.encoder, store_, rng, cfg.init_range);
        enc_T_ = BiLstmEncoder<T>("enc_T", cfg.encoder, store_, rng, cfg.init_range);

        W_r_ = store_.add("literal.W_r", ParamGroup::Other, init({2, H2}));
        b_r_ = store_.add("literal.b_r", ParamGroup::Other, Tensor<T>({2}));
        W_l_ = store_.add("literal.W_l", ParamGroup::Other, init({dp, 2 * H2}));
        b_l_ = store_.add("literal.b_l", ParamGroup::Other, Tensor<T>({dp}));
        W_z_ = store_.add("implied.W_z", ParamGroup::Other, init({2, H2}));
        b_z_ = store_.add("implied.b_z", ParamGroup::Other, Tensor<T>({2}));
        W_d_ = store_.add("implied.W_d", ParamGroup::Other, init({dp, 2 * H2}));
        b_d_ = store_.add("implied.b_d", ParamGroup::Other, Tensor<T>({dp}));
        // Initialized last so the analyzer width does not shift any other
        // parameter's draws.
        const std::size_t a_in = cfg.analyzer == Analyzer::Concat ? 2 * dp : dp;
        W_p_ = store_.add("analyzer.W_p", ParamGroup::Other, init({2, a_in}));
        b_p_ = store_.add("analyzer.b_p", ParamGroup::Other, Tensor<T>({2}));
    }

    const ModelConfig& config() const { return cfg_; }
    ParameterStore<T>& params() { return store_; }
    const ParameterStore<T>& params() const { return store_; }
    std::size_t vocab_size() const { return store_.tensor(embedding_).rows(); }
    const BiLstmEncoder<T>& encoder_L() const { return enc_L_; }
    const BiLstmEncoder<T>& encoder_D() const { return enc_D_; }
    const BiLstmEncoder<T>& encoder_T() const { return enc_T_; }

    Tensor<T>& embedding() { return store_.tensor(embedding_); }
    const Tensor<T>& embedding() const { return store_.tensor(embedding_); }

    // Replaces the embedding matrix; row 0 (PAD) is forced to zero.
    template <class U>
    void set_embedding(const Tensor<U>& e) {
        auto& cur = embedding();
        if (e.shape() != cur.shape())
            throw ShapeError("embedding shape " + shape_string(e.shape()) + ", model expects " +
                             shape_string(cur.shape()));
        std::transform(e.values().begin(), e.values().end(), cur.values().begin(),
                       [](U v) { return static_cast<T>(v); });
        for (auto& v : cur.row(0)) v = T{0};
    }

    ForwardOutput<T> forward(const ExampleView& ex, bool training, Rng& rng, Trace* trace = nullptr) const {
        Trace local;
        Trace& tr = trace ? *trace : local;
        ForwardOutput<T> out;

        out.v_L = encode_channel(enc_L_, ex.w_l, training, rng, tr.lit);
        out.v_D = encode_channel(enc_D_, ex.w_d, training, rng, tr.imp);
        out.v_T = encode_channel(enc_T_, ex.w_t, training, rng, tr.txt);

        out.P_l = softmax(std::span<const T>(affine(T_(W_r_), T_(b_r_), std::span<const T>(out.v_L))));
        out.P_d = softmax(std::span<const T>(affine(T_(W_z_), T_(b_z_), std::span<const T>(out.v_D))));

        tr.cat_L = concat(std::span<const T>(out.v_L), std::span<const T>(out.v_T));
        tr.cat_D = concat(std::span<const T>(out.v_D), std::span<const T>(out.v_T));
        tr.z_L = affine(T_(W_l_), T_(b_l_), std::span<const T>(tr.cat_L));
        tr.z_D = affine(T_(W_d_), T_(b_d_), std::span<const T>(tr.cat_D));
        out.v_Lp = relu(std::span<const T>(tr.z_L));
        out.v_Dp = relu(std::span<const T>(tr.z_D));

        if (cfg_.analyzer == Analyzer::Concat) {
            tr.analyzer_in = concat(std::span<const T>(out.v_Lp), std::span<const T>(out.v_Dp));
        } else {
            tr.analyzer_in.resize(out.v_Lp.size());
            for (std::size_t i = 0; i < out.v_Lp.size(); ++i) tr.analyzer_in[i] = out.v_Lp[i] - out.v_Dp[i];
        }
        out.P_s = softmax(std::span<const T>(affine(T_(W_p_), T_(b_p_), std::span<const T>(tr.analyzer_in))));
        return out;
    }

    // Inference pass: no dropout, no trace.
    ForwardOutput<T> infer(const ExampleView& ex) const {
        Rng unused(0);
        return forward(ex, false, unused);
    }

    // Forward, loss, and backward for one example. Gradients of
    // `scale * loss` are accumulated into the store; the returned breakdown
    // is unscaled.
    LossBreakdown accumulate_gradients(const ExampleView& ex, const WeakLabels& labels,
                                       const LossWeights& w, T scale, bool training, Rng& rng,
                                       ForwardOutput<T>* out_copy = nullptr) {
        Trace tr;
        ForwardOutput<T> out = forward(ex, training, rng, &tr);
        LossBreakdown lb = loss(out, labels, w);
        backward(out, tr, labels, w, scale);
        if (out_copy) *out_copy = std::move(out);
        return lb;
    }

    void backward(const ForwardOutput<T>& out, const Trace& tr, const WeakLabels& labels,
                  const LossWeights& w, T scale) {
        const std::size_t H2 = 2 * cfg_.encoder.hidden_dim, dp = cfg_.channel_dim();
        std::vector<T> dv_L(H2, T{0}), dv_D(H2, T{0}), dv_T(H2, T{0});

        // Analyzer.
        std::vector<T> dlog(2, T{0});
        softmax_xent_backward(std::span<const T>(out.P_s), static_cast<std::size_t>(labels.y_s),
                              static_cast<T>(w.lambda1) * scale, std::span<T>(dlog));
        std::vector<T> da(tr.analyzer_in.size(), T{0});
        affine_backward(P_(W_p_), P_(b_p_), std::span<const T>(tr.analyzer_in), std::span<const T>(dlog),
                        std::span<T>(da));
        std::vector<T> dv_Lp(dp, T{0}), dv_Dp(dp, T{0});
        if (cfg_.analyzer == Analyzer::Concat) {
            concat_backward(std::span<const T>(da), std::span<T>(dv_Lp), std::span<T>(dv_Dp));
        } else {
            for (std::size_t i = 0; i < dp; ++i) {
                dv_Lp[i] = da[i];
                dv_Dp[i] = -da[i];
            }
        }

        // Channel projections.
        auto channel_back = [&](std::size_t W, std::size_t b, const std::vector<T>& z,
                                const std::vector<T>& cat, const std::vector<T>& dvp, std::vector<T>& dv) {
            std::vector<T> dz(dp, T{0}), dcat(2 * H2, T{0});
            relu_backward(std::span<const T>(z), std::span<const T>(dvp), std::span<T>(dz));
            affine_backward(P_(W), P_(b), std::span<const T>(cat), std::span<const T>(dz), std::span<T>(dcat));
            concat_backward(std::span<const T>(dcat), std::span<T>(dv), std::span<T>(dv_T));
        };
        channel_back(W_l_, b_l_, tr.z_L, tr.cat_L, dv_Lp, dv_L);
        channel_back(W_d_, b_d_, tr.z_D, tr.cat_D, dv_Dp, dv_D);

        // Sentiment heads.
        if (labels.aux_mask) {
            std::vector<T> dl(2, T{0}), dd(2, T{0});
            softmax_xent_backward(std::span<const T>(out.P_l), static_cast<std::size_t>(class_index(*labels.y_l)),
                                  static_cast<T>(w.lambda2) * scale, std::span<T>(dl));
            affine_backward(P_(W_r_), P_(b_r_), std::span<const T>(out.v_L), std::span<const T>(dl),
                            std::span<T>(dv_L));
            softmax_xent_backward(std::span<const T>(out.P_d), static_cast<std::size_t>(class_index(*labels.y_d)),
                                  static_cast<T>(w.lambda3) * scale, std::span<T>(dd));
            affine_backward(P_(W_z_), P_(b_z_), std::span<const T>(out.v_D), std::span<const T>(dd),
                            std::span<T>(dv_D));
        }

        backward_channel(enc_L_, tr.lit, dv_L);
        backward_channel(enc_D_, tr.imp, dv_D);
        backward_channel(enc_T_, tr.txt, dv_T);
    }

private:
    const Tensor<T>& T_(std::size_t i) const { return store_.tensor(i); }
    Tensor<T>& P_(std::size_t i) { return store_.tensor(i); }

    std::vector<T> encode_channel(const BiLstmEncoder<T>& enc, std::span<const std::int32_t> ids, bool training,
                                  Rng& rng, ChannelTrace& ct) const {
        const auto& E = embedding();
        ct.ids.assign(ids.begin(), ids.end());
        ct.embedded.clear();
        ct.dropout_scale.clear();
        for (std::int32_t id : ids) {
            if (id < 0 || static_cast<std::size_t>(id) >= E.rows())
                throw DataError("token index " + std::to_string(id) + " outside vocabulary of size " +
                                std::to_string(E.rows()));
            std::vector<T> scale;
            ct.embedded.push_back(dropout(E.row(static_cast<std::size_t>(id)), cfg_.dropout_embedding,
                                          training, rng, &scale));
            ct.dropout_scale.push_back(std::move(scale));
        }
        return enc.encode(store_, ct.embedded, &ct.encoder);
    }

    void backward_channel(const BiLstmEncoder<T>& enc, const ChannelTrace& ct, const std::vector<T>& dv) {
        auto dxs = enc.backward(store_, ct.encoder, std::span<const T>(dv));
        auto& E = embedding();
        E.ensure_grad();
        for (std::size_t k = 0; k < dxs.size(); ++k) {
            auto grow = E.grad_row(static_cast<std::size_t>(ct.ids[k]));
            dropout_backward(std::span<const T>(ct.dropout_scale[k]), std::span<const T>(dxs[k]), grow);
        }
    }

    ModelConfig cfg_;
    ParameterStore<T> store_;
    std::size_t embedding_ = 0;
    BiLstmEncoder<T> enc_L_, enc_D_, enc_T_;
    std::size_t W_r_ = 0, b_r_ = 0, W_l_ = 0, b_l_ = 0;
    std::size_t W_z_ = 0, b_z_ = 0, W_d_ = 0, b_d_ = 0;
    std::size_t W_p_ = 0, b_p_ = 0;
};

// Writes one row per (example, channel): id, y_s, channel, then the d'
// components of v_L' (literal) or v_D' (implied). Tab-separated, no header.
template <class T>
void export_representations(const DCNet<T>& model, std::span<const std::string> ids,
                            std::span<const int> y_s, std::span<const ExampleView> views,
                            const std::filesystem::path& path) {
    if (ids.size() != views.size() || y_s.size() != views.size())
        throw std::invalid_argument("export_representations: size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    auto write_row = [&](std::size_t i, std::string_view channel, const std::vector<T>& v) {
        out << ids[i] << '\t' << y_s[i] << '\t' << channel;
        std::array<char, 64> buf;
        for (T x : v) {
            auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
            out << '\t' << std::string_view(buf.data(), static_cast<std::size_t>(end - buf.data()));
        }
        out << '\n';
    };
    for (std::size_t i = 0; i < views.size(); ++i) {
        auto o = model.infer(views[i]);
        write_row(i, "literal", o.v_Lp);
        write_row(i, "implied", o.v_Dp);
    }
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace dcnet

#endif  // DCNET_MODEL_HPP
