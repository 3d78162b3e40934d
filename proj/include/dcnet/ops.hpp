#ifndef DCNET_OPS_HPP
#define DCNET_OPS_HPP

// Forward/backward pairs for the handful of primitives the model uses.
// Backward functions accumulate (+=) into parameter gradients and into any
// non-empty input-gradient span they are given.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "dcnet/random.hpp"
#include "dcnet/tensor.hpp"

namespace dcnet {

// Span parameters that follow a Tensor argument take T from the tensor.
template <class T>
using cspan = std::type_identity_t<std::span<const T>>;
template <class T>
using mspan = std::type_identity_t<std::span<T>>;

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

template <class T>
T sigmoid(T x) {
    if (x >= 0) {
        T z = std::exp(-x);
        return T{1} / (T{1} + z);
    }
    T z = std::exp(x);
    return z / (T{1} + z);
}

}  // namespace detail

// y = W x + b, W is [d_out x d_in].
template <class T>
void affine(const Tensor<T>& W, const Tensor<T>& b, cspan<T> x, mspan<T> y) {
    const std::size_t d_out = W.rows(), d_in = W.cols();
    detail::require(W.rank() == 2 && b.size() == d_out && x.size() == d_in && y.size() == d_out,
                    "affine: W " + shape_string(W.shape()) + ", b " + shape_string(b.shape()) +
                        ", x[" + std::to_string(x.size()) + "]");
    const T* w = W.values().data();
    for (std::size_t r = 0; r < d_out; ++r) {
        T acc = b[r];
        const T* wr = w + r * d_in;
        for (std::size_t c = 0; c < d_in; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

template <class T>
std::vector<T> affine(const Tensor<T>& W, const Tensor<T>& b, cspan<T> x) {
    std::vector<T> y(W.rows());
    affine(W, b, x, std::span<T>(y));
    return y;
}

template <class T>
void affine_backward(Tensor<T>& W, Tensor<T>& b, cspan<T> x, cspan<T> dy, mspan<T> dx) {
    const std::size_t d_out = W.rows(), d_in = W.cols();
    detail::require(dy.size() == d_out && x.size() == d_in && (dx.empty() || dx.size() == d_in),
                    "affine_backward: shape mismatch");
    W.ensure_grad();
    b.ensure_grad();
    T* gw = W.grad().data();
    const T* w = W.values().data();
    auto gb = b.grad();
    for (std::size_t r = 0; r < d_out; ++r) {
        const T g = dy[r];
        gb[r] += g;
        if (g == T{0}) continue;
        T* gwr = gw + r * d_in;
        for (std::size_t c = 0; c < d_in; ++c) gwr[c] += g * x[c];
        if (!dx.empty()) {
            const T* wr = w + r * d_in;
            for (std::size_t c = 0; c < d_in; ++c) dx[c] += g * wr[c];
        }
    }
}

// Elementwise max(0, x); the subgradient at 0 is 0.
template <class T>
std::vector<T> relu(std::span<const T> x) {
    std::vector<T> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
    return y;
}

template <class T>
void relu_backward(std::span<const T> x, std::span<const T> dy, std::span<T> dx) {
    detail::require(x.size() == dy.size() && dx.size() == x.size(), "relu_backward: shape mismatch");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > T{0}) dx[i] += dy[i];
}

template <class T>
std::vector<T> concat(std::span<const T> a, std::span<const T> b) {
    std::vector<T> y;
    y.reserve(a.size() + b.size());
    y.insert(y.end(), a.begin(), a.end());
    y.insert(y.end(), b.begin(), b.end());
    return y;
}

// Routes dy[0, da.size()) to da and the remainder to db.
template <class T>
void concat_backward(std::span<const T> dy, std::span<T> da, std::span<T> db) {
    detail::require(dy.size() == da.size() + db.size(), "concat_backward: shape mismatch");
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i];
    for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[da.size() + i];
}

template <class T>
std::vector<T> softmax(std::span<const T> logits) {
    std::vector<T> p(logits.size());
    if (logits.empty()) return p;
    T mx = *std::max_element(logits.begin(), logits.end());
    T sum = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

template <class T>
struct SoftmaxXent {
    std::vector<T> probs;
    T loss = 0;
};

// Softmax with cross-entropy against a gold class. The loss is computed from
// the max-shifted log-sum-exp so saturated logits do not underflow to log(0).
template <class T>
SoftmaxXent<T> softmax_xent(std::span<const T> logits, std::size_t gold) {
    if (logits.size() < 2) throw ShapeError("softmax_xent: need at least two classes");
    if (gold >= logits.size())
        throw std::out_of_range("softmax_xent: gold class " + std::to_string(gold) + " out of range");
    SoftmaxXent<T> out;
    out.probs = softmax(logits);
    T mx = *std::max_element(logits.begin(), logits.end());
    T sum = 0;
    for (auto l : logits) sum += std::exp(l - mx);
    out.loss = std::log(sum) - (logits[gold] - mx);
    return out;
}

// dL/dlogits = scale * (probs - onehot(gold)).
template <class T>
void softmax_xent_backward(std::span<const T> probs, std::size_t gold, T scale, std::span<T> dlogits) {
    detail::require(dlogits.size() == probs.size() && gold < probs.size(),
                    "softmax_xent_backward: shape mismatch");
    for (std::size_t i = 0; i < probs.size(); ++i)
        dlogits[i] += scale * (probs[i] - (i == gold ? T{1} : T{0}));
}

// Gate order inside the 4H pre-activation: input, forget, candidate, output.
template <class T>
struct LstmStep {
    std::vector<T> x, h_prev, c_prev;
    std::vector<T> i, f, g, o;
    std::vector<T> c, h;
};

// One LSTM step. W_x is [4H x d_in], W_h is [4H x H], b is [4H].
template <class T>
LstmStep<T> lstm_cell(const Tensor<T>& W_x, const Tensor<T>& W_h, const Tensor<T>& b,
                      cspan<T> x, cspan<T> h_prev, cspan<T> c_prev) {
    const std::size_t H = W_h.cols();
    detail::require(W_x.rows() == 4 * H && W_h.rows() == 4 * H && b.size() == 4 * H &&
                        W_x.cols() == x.size() && h_prev.size() == H && c_prev.size() == H,
                    "lstm_cell: W_x " + shape_string(W_x.shape()) + ", W_h " +
                        shape_string(W_h.shape()) + ", x[" + std::to_string(x.size()) + "]");
    LstmStep<T> s;
    s.x.assign(x.begin(), x.end());
    s.h_prev.assign(h_prev.begin(), h_prev.end());
    s.c_prev.assign(c_prev.begin(), c_prev.end());

    std::vector<T> z(4 * H);
    affine(W_x, b, x, std::span<T>(z));
    const T* wh = W_h.values().data();
    for (std::size_t r = 0; r < 4 * H; ++r) {
        T acc = 0;
        const T* row = wh + r * H;
        for (std::size_t k = 0; k < H; ++k) acc += row[k] * h_prev[k];
        z[r] += acc;
    }

    s.i.resize(H);
    s.f.resize(H);
    s.g.resize(H);
    s.o.resize(H);
    s.c.resize(H);
    s.h.resize(H);
    for (std::size_t k = 0; k < H; ++k) {
        s.i[k] = detail::sigmoid(z[k]);
        s.f[k] = detail::sigmoid(z[H + k]);
        s.g[k] = std::tanh(z[2 * H + k]);
        s.o[k] = detail::sigmoid(z[3 * H + k]);
        s.c[k] = s.f[k] * c_prev[k] + s.i[k] * s.g[k];
        s.h[k] = s.o[k] * std::tanh(s.c[k]);
    }
    return s;
}

// Given dL/dh_t and dL/dc_t (the latter from the following step), accumulates
// weight gradients and writes (+=) dL/dx_t, dL/dh_{t-1}, dL/dc_{t-1}.
template <class T>
void lstm_cell_backward(Tensor<T>& W_x, Tensor<T>& W_h, Tensor<T>& b, const LstmStep<T>& s,
                        cspan<T> dh, cspan<T> dc_next, mspan<T> dx, mspan<T> dh_prev, mspan<T> dc_prev) {
    const std::size_t H = s.h.size();
    detail::require(dh.size() == H && dc_next.size() == H && dh_prev.size() == H &&
                        dc_prev.size() == H && (dx.empty() || dx.size() == s.x.size()),
                    "lstm_cell_backward: shape mismatch");
    std::vector<T> dz(4 * H);
    for (std::size_t k = 0; k < H; ++k) {
        const T tc = std::tanh(s.c[k]);
        const T d_o = dh[k] * tc;
        const T d_c = dc_next[k] + dh[k] * s.o[k] * (T{1} - tc * tc);
        const T d_i = d_c * s.g[k];
        const T d_g = d_c * s.i[k];
        const T d_f = d_c * s.c_prev[k];
        dc_prev[k] += d_c * s.f[k];
        dz[k] = d_i * s.i[k] * (T{1} - s.i[k]);
        dz[H + k] = d_f * s.f[k] * (T{1} - s.f[k]);
        dz[2 * H + k] = d_g * (T{1} - s.g[k] * s.g[k]);
        dz[3 * H + k] = d_o * s.o[k] * (T{1} - s.o[k]);
    }
    affine_backward(W_x, b, std::span<const T>(s.x), std::span<const T>(dz), dx);

    W_h.ensure_grad();
    T* gwh = W_h.grad().data();
    const T* wh = W_h.values().data();
    for (std::size_t r = 0; r < 4 * H; ++r) {
        const T g = dz[r];
        if (g == T{0}) continue;
        T* grow = gwh + r * H;
        const T* wrow = wh + r * H;
        for (std::size_t k = 0; k < H; ++k) {
            grow[k] += g * s.h_prev[k];
            dh_prev[k] += g * wrow[k];
        }
    }
}

// Inverted dropout: survivors are scaled by 1/(1-rate) at training time so
// inference is the identity. `scale` receives the per-element multiplier.
template <class T>
std::vector<T> dropout(std::span<const T> x, double rate, bool training, Rng& rng,
                       std::vector<T>* scale = nullptr) {
    if (!(rate >= 0.0 && rate < 1.0))
        throw std::invalid_argument("dropout rate must be in [0, 1), got " + std::to_string(rate));
    std::vector<T> y(x.begin(), x.end());
    if (scale) scale->assign(x.size(), T{1});
    if (!training || rate == 0.0) return y;
    const T keep = static_cast<T>(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < x.size(); ++i) {
        T m = rng.bernoulli(rate) ? T{0} : keep;
        y[i] *= m;
        if (scale) (*scale)[i] = m;
    }
    return y;
}

template <class T>
void dropout_backward(std::span<const T> scale, std::span<const T> dy, std::span<T> dx) {
    detail::require(scale.size() == dy.size() && dx.size() == dy.size(),
                    "dropout_backward: shape mismatch");
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * scale[i];
}

}  // namespace dcnet

#endif  // DCNET_OPS_HPP
